// Brute-force exact solver for the sampled bounding LP: minimize the mean
// residual subject to residual >= 0 at every sample, by enumerating all
// basic solutions (each (d+1)-subset of active constraints). This is the
// correctness oracle for the closed-form Step 1-bis routines and therefore
// deliberately shares no helper code with sampled_bounds.cpp: it solves the
// augmented (d+1)x(d+1) system [kappa | 1] x = g directly with its own
// elimination instead of the anchored difference form.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "geocert/sampled_bounds.hpp"

namespace geocert {

namespace {

// Same numeric feasibility slack as the production routines (defined
// independently so the files stay decoupled).
constexpr double kOracleFeasTol = 1e-9;

// Plain Gauss-Jordan solve of an n x n system; returns false if singular.
bool dense_solve(std::vector<double> m, std::vector<double> rhs, int n,
                 std::vector<double>& x) {
  double scale = 1.0;
  for (double v : m) scale = std::max(scale, std::abs(v));
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m[r * n + col]) > std::abs(m[pivot * n + col])) pivot = r;
    if (std::abs(m[pivot * n + col]) < 1e-12 * scale) return false;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(m[pivot * n + c], m[col * n + c]);
      std::swap(rhs[pivot], rhs[col]);
    }
    const double inv = 1.0 / m[col * n + col];
    for (int c = 0; c < n; ++c) m[col * n + c] *= inv;
    rhs[col] *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r * n + col];
      if (f == 0.0) continue;
      for (int c = 0; c < n; ++c) m[r * n + c] -= f * m[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  x = rhs;
  return true;
}

// All (k out of P) index subsets in lexicographic order.
std::vector<std::vector<int>> all_subsets(int P, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> c(k);
  for (int i = 0; i < k; ++i) c[i] = i;
  while (true) {
    out.push_back(c);
    int i = k - 1;
    while (i >= 0 && c[i] == P - k + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

}  // namespace

LpSolution lp_oracle(const SampleSet& samples, BoundSide side) {
  const int P = samples.count();
  const int d = samples.dims();
  const std::size_t npix = samples.pixel_count();
  if (P < 2) throw InvalidInput("lp_oracle needs at least 2 distinct samples");
  const double sign = side == BoundSide::Lower ? 1.0 : -1.0;

  LpSolution sol;
  sol.dims = d;
  sol.pixels = npix;
  sol.a.assign(static_cast<std::size_t>(d) * npix, 0.0);
  sol.b.assign(npix, 0.0);
  sol.objective.assign(npix, std::numeric_limits<double>::infinity());

  // Constant dimensions cannot appear in an invertible basis; drop them
  // (their slope stays 0, matching any bound restricted to the box).
  std::vector<int> active;
  for (int i = 0; i < d; ++i)
    for (int p = 1; p < P; ++p)
      if (samples.params[p][i] != samples.params[0][i]) {
        active.push_back(i);
        break;
      }
  const int ad = static_cast<int>(active.size());
  if (ad == 0) throw InvalidInput("lp_oracle: all sampled parameters coincide");

  ParamVector mean_kappa(ad, 0.0);
  for (int p = 0; p < P; ++p)
    for (int i = 0; i < ad; ++i) mean_kappa[i] += samples.params[p][active[i]];
  for (double& v : mean_kappa) v /= P;

  const int basis = ad + 1;
  if (P < basis) throw InvalidInput("lp_oracle: not enough samples for a basis");
  const std::vector<std::vector<int>> subsets = all_subsets(P, basis);

  std::vector<double> sys(basis * basis), rhs(basis), x;
  for (std::size_t pix = 0; pix < npix; ++pix) {
    double mean_g = 0.0;
    for (int p = 0; p < P; ++p) mean_g += sign * samples.pixel(p, pix);
    mean_g /= P;

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    for (const std::vector<int>& sub : subsets) {
      for (int r = 0; r < basis; ++r) {
        for (int i = 0; i < ad; ++i)
          sys[r * basis + i] = samples.params[sub[r]][active[i]];
        sys[r * basis + ad] = 1.0;
        rhs[r] = sign * samples.pixel(sub[r], pix);
      }
      if (!dense_solve(sys, rhs, basis, x)) continue;
      bool feasible = true;
      for (int p = 0; p < P && feasible; ++p) {
        double v = x[ad];
        for (int i = 0; i < ad; ++i) v += x[i] * samples.params[p][active[i]];
        feasible = sign * samples.pixel(p, pix) - v >= -kOracleFeasTol;
      }
      if (!feasible) continue;
      double obj = mean_g - x[ad];
      for (int i = 0; i < ad; ++i) obj -= x[i] * mean_kappa[i];
      if (obj < best) {
        best = obj;
        best_x = x;
      }
    }
    if (!best_x.empty()) {
      sol.objective[pix] = best;
      for (int i = 0; i < ad; ++i)
        sol.a[active[i] * npix + pix] = sign * best_x[i];
      sol.b[pix] = sign * best_x[ad];
    } else {
      // Flat line through the sample extremum (always feasible, objective
      // is the mean gap to it).
      double m = std::numeric_limits<double>::infinity();
      for (int p = 0; p < P; ++p) m = std::min(m, sign * samples.pixel(p, pix));
      sol.b[pix] = sign * m;
      sol.objective[pix] = mean_g - m;
    }
  }
  return sol;
}

}  // namespace geocert
