#include "geocert/transform.hpp"

#include <cmath>

namespace geocert {

namespace {

// Scaling factor from the user-facing parameter s: lambda = 1 + s/100.
double scale_factor(double s) { return 1.0 + s / 100.0; }

Interval scale_factor(const Interval& s) {
  return {scale_factor(s.lo), scale_factor(s.hi)};
}

// Shear coefficient from the user-facing parameter s.
double shear_coeff(double s) { return s / 100.0; }

// Tight range of a*cos(t) + b*sin(t) over t in [t.lo, t.hi]. The expression
// equals R*cos(t - phi) with R = hypot(a,b), so the extrema are the endpoint
// values plus +-R when a critical point of the shifted cosine lies inside.
// A sub-1e-13 inflation absorbs the rounding difference between this form
// and direct evaluation of a*cos+b*sin.
Interval amp_cos(double a, double b, const Interval& t) {
  const double r = std::hypot(a, b);
  if (r == 0.0) return Interval::point(0.0);
  const double vlo = a * std::cos(t.lo) + b * std::sin(t.lo);
  const double vhi = a * std::cos(t.hi) + b * std::sin(t.hi);
  double lo = std::min(vlo, vhi);
  double hi = std::max(vlo, vhi);
  constexpr double kPi = 3.141592653589793238462643383279502884;
  const double phi = std::atan2(b, a);
  if (detail::contains_grid_point(t.lo - phi, t.hi - phi, 2 * kPi, 0.0)) hi = r;
  if (detail::contains_grid_point(t.lo - phi, t.hi - phi, 2 * kPi, kPi)) lo = -r;
  const double pad = 1e-14 * (1.0 + r);
  return {lo - pad, hi + pad};
}

void require_dims(const TransformSpec& spec, std::size_t got) {
  if (static_cast<int>(got) != spec.dims())
    throw InvalidInput(std::string("expected ") + std::to_string(spec.dims()) +
                       " parameter(s) for " + transform_kind_name(spec.kind) +
                       ", got " + std::to_string(got));
}

}  // namespace

const char* transform_kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::Rotation: return "rotation";
    case TransformKind::Translation: return "translation";
    case TransformKind::Scaling: return "scaling";
    case TransformKind::Shearing: return "shearing";
  }
  throw InvalidInput("unknown transform kind");
}

TransformKind transform_kind_from_name(const std::string& name) {
  if (name == "rotation") return TransformKind::Rotation;
  if (name == "translation") return TransformKind::Translation;
  if (name == "scaling") return TransformKind::Scaling;
  if (name == "shearing") return TransformKind::Shearing;
  throw InvalidInput("unknown transform kind: " + name);
}

int transform_dims(TransformKind kind) {
  return kind == TransformKind::Translation ? 2 : 1;
}

void check_params(const TransformSpec& spec, const ParamVector& params) {
  require_dims(spec, params.size());
  for (double p : params)
    if (!std::isfinite(p)) throw InvalidInput("transform parameter is not finite");
  if (spec.kind == TransformKind::Scaling && scale_factor(params[0]) == 0.0)
    throw SingularTransform("scaling factor is zero");
}

void check_box(const TransformSpec& spec, const ParamBox& box) {
  require_dims(spec, box.lo.size());
  for (int d = 0; d < box.dims(); ++d)
    if (!std::isfinite(box.lo[d]) || !std::isfinite(box.hi[d]))
      throw InvalidInput("parameter box bound is not finite");
  if (spec.kind == TransformKind::Scaling) {
    const Interval lambda = scale_factor(box.interval(0));
    if (lambda.lo <= 0.0 && lambda.hi >= 0.0)
      throw SingularTransform("scaling factor range crosses zero");
  }
}

Coord inverse_map(const TransformSpec& spec, const ParamVector& params,
                  double i, double j) {
  require_dims(spec, params.size());
  const double cx = spec.center_x();
  const double cy = spec.center_y();
  const double rx = i - cx;
  const double ry = j - cy;
  switch (spec.kind) {
    case TransformKind::Rotation: {
      const double c = std::cos(params[0]);
      const double s = std::sin(params[0]);
      return {cx + rx * c + ry * s, cy - rx * s + ry * c};
    }
    case TransformKind::Translation:
      return {i - params[0], j - params[1]};
    case TransformKind::Scaling: {
      const double lambda = scale_factor(params[0]);
      if (lambda == 0.0) throw SingularTransform("scaling factor is zero");
      return {cx + rx / lambda, cy + ry / lambda};
    }
    case TransformKind::Shearing:
      return {cx + rx - shear_coeff(params[0]) * ry, j};
  }
  throw InvalidInput("unknown transform kind");
}

std::pair<Interval, Interval> inverse_map_enclosure(const TransformSpec& spec,
                                                    const ParamBox& box,
                                                    double i, double j) {
  check_box(spec, box);
  const double cx = spec.center_x();
  const double cy = spec.center_y();
  const double rx = i - cx;
  const double ry = j - cy;
  switch (spec.kind) {
    case TransformKind::Rotation: {
      // x = cx + rx cos(t) + ry sin(t), y = cy + ry cos(t) - rx sin(t);
      // each is a single shifted cosine, so the range is exact per axis.
      const Interval t = box.interval(0);
      return {cx + amp_cos(rx, ry, t), cy + amp_cos(ry, -rx, t)};
    }
    case TransformKind::Translation:
      return {i - box.interval(0), j - box.interval(1)};
    case TransformKind::Scaling: {
      const Interval inv = reciprocal(scale_factor(box.interval(0)));
      return {cx + rx * inv, cy + ry * inv};
    }
    case TransformKind::Shearing:
      return {cx + rx + (-ry / 100.0) * box.interval(0), Interval::point(j)};
  }
  throw InvalidInput("unknown transform kind");
}

std::pair<Interval, Interval> inverse_map_derivative_enclosure(
    const TransformSpec& spec, const ParamBox& box, double i, double j, int dim) {
  check_box(spec, box);
  if (dim < 0 || dim >= spec.dims())
    throw InvalidInput("derivative dimension out of range");
  const double rx = i - spec.center_x();
  const double ry = j - spec.center_y();
  switch (spec.kind) {
    case TransformKind::Rotation: {
      // dx/dt = ry cos(t) - rx sin(t), dy/dt = -rx cos(t) - ry sin(t)
      const Interval t = box.interval(0);
      return {amp_cos(ry, -rx, t), amp_cos(-rx, -ry, t)};
    }
    case TransformKind::Translation:
      // x = i - v1, y = j - v2
      return dim == 0
                 ? std::pair{Interval::point(-1.0), Interval::point(0.0)}
                 : std::pair{Interval::point(0.0), Interval::point(-1.0)};
    case TransformKind::Scaling: {
      // x = cx + rx / lambda(s), dx/ds = -rx / (100 lambda^2)
      const Interval inv_sq = reciprocal(square(scale_factor(box.interval(0))));
      return {(-rx / 100.0) * inv_sq, (-ry / 100.0) * inv_sq};
    }
    case TransformKind::Shearing:
      // x = cx + rx - (s/100) ry, y = j
      return {Interval::point(-ry / 100.0), Interval::point(0.0)};
  }
  throw InvalidInput("unknown transform kind");
}

}  // namespace geocert
