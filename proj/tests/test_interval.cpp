#include "doctest.h"

#include <cmath>
#include <random>

#include "geocert/interval.hpp"

using namespace geocert;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("interval construction validates ordering") {
  CHECK_NOTHROW(Interval(1.0, 1.0));
  CHECK_THROWS_AS(Interval(1.0, 0.5), InvalidInput);
  const Interval p = Interval::point(3.0);
  CHECK(p.lo == 3.0);
  CHECK(p.hi == 3.0);
  CHECK(p.width() == 0.0);
}

TEST_CASE("interval arithmetic") {
  const Interval a{1.0, 2.0};
  const Interval b{3.0, 5.0};

  const Interval sum = a + b;
  CHECK(sum.lo == 4.0);
  CHECK(sum.hi == 7.0);

  const Interval diff = a - b;
  CHECK(diff.lo == -4.0);
  CHECK(diff.hi == -1.0);

  const Interval neg = -2.0 * Interval{1.0, 3.0};
  CHECK(neg.lo == -6.0);
  CHECK(neg.hi == -2.0);

  const Interval prod = Interval{-1.0, 2.0} * Interval{3.0, 4.0};
  CHECK(prod.lo == -4.0);
  CHECK(prod.hi == 8.0);

  CHECK(square(Interval{-1.0, 2.0}).lo == 0.0);
  CHECK(square(Interval{-1.0, 2.0}).hi == 4.0);
  CHECK(square(Interval{-3.0, -1.0}).lo == 1.0);
  CHECK(square(Interval{-3.0, -1.0}).hi == 9.0);

  const Interval rec = reciprocal(Interval{2.0, 4.0});
  CHECK(rec.lo == doctest::Approx(0.25));
  CHECK(rec.hi == doctest::Approx(0.5));
  CHECK_THROWS_AS(reciprocal(Interval{-1.0, 1.0}), SingularTransform);
  CHECK_THROWS_AS(reciprocal(Interval{0.0, 1.0}), SingularTransform);

  const Interval div = 1.0 / Interval{-4.0, -2.0};
  CHECK(div.lo == doctest::Approx(-0.5));
  CHECK(div.hi == doctest::Approx(-0.25));

  CHECK(Interval{-3.0, 2.0}.abs_sup() == 3.0);
  CHECK(Interval{1.0, 2.0}.abs_sup() == 2.0);
}

TEST_CASE("interval cos takes exact extrema across critical points") {
  // 0 inside -> max is exactly 1
  const Interval c1 = interval_cos(Interval{-0.1, 0.1});
  CHECK(c1.hi == 1.0);
  CHECK(c1.lo == doctest::Approx(std::cos(0.1)));

  // pi inside -> min is exactly -1
  const Interval c2 = interval_cos(Interval{3.0, 3.3});
  CHECK(c2.lo == -1.0);
  CHECK(c2.hi == doctest::Approx(std::cos(3.3)));

  // monotone stretch: endpoints only
  const Interval c3 = interval_cos(Interval{0.5, 1.0});
  CHECK(c3.lo == doctest::Approx(std::cos(1.0)));
  CHECK(c3.hi == doctest::Approx(std::cos(0.5)));

  // full period
  const Interval c4 = interval_cos(Interval{0.0, 7.0});
  CHECK(c4.lo == -1.0);
  CHECK(c4.hi == 1.0);

  // critical point exactly at an endpoint still counts
  const Interval c5 = interval_cos(Interval{0.0, 0.5});
  CHECK(c5.hi == 1.0);
}

TEST_CASE("interval sin takes exact extrema across critical points") {
  const Interval s1 = interval_sin(Interval{1.4, 1.8});  // pi/2 inside
  CHECK(s1.hi == 1.0);
  CHECK(s1.lo == doctest::Approx(std::min(std::sin(1.4), std::sin(1.8))));

  const Interval s2 = interval_sin(Interval{-2.0, -1.0});  // -pi/2 inside
  CHECK(s2.lo == -1.0);

  const Interval s3 = interval_sin(Interval{0.1, 0.4});  // monotone
  CHECK(s3.lo == doctest::Approx(std::sin(0.1)));
  CHECK(s3.hi == doctest::Approx(std::sin(0.4)));
}

TEST_CASE("trig enclosures are sound on random boxes") {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> center(-10.0, 10.0);
  std::uniform_real_distribution<double> halfwidth(0.0, 4.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double mid = center(rng);
    const double hw = halfwidth(rng);
    const Interval t{mid - hw, mid + hw};
    const Interval c = interval_cos(t);
    const Interval s = interval_sin(t);
    for (int k = 0; k < 25; ++k) {
      const double v = t.lo + unit(rng) * t.width();
      CHECK(c.contains(std::cos(v)));
      CHECK(s.contains(std::sin(v)));
    }
    // endpoints too
    CHECK(c.contains(std::cos(t.lo)));
    CHECK(c.contains(std::cos(t.hi)));
    CHECK(s.contains(std::sin(t.lo)));
    CHECK(s.contains(std::sin(t.hi)));
  }
}

TEST_CASE("trig enclosures are tight on wide boxes") {
  const Interval t{-kPi, kPi};
  const Interval c = interval_cos(t);
  CHECK(c.lo == -1.0);
  CHECK(c.hi == 1.0);
  const Interval s = interval_sin(t);
  CHECK(s.lo == -1.0);
  CHECK(s.hi == 1.0);
}
