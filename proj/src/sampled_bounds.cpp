#include "geocert/sampled_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geocert {

namespace {

// Residuals this close to zero still count as feasible; keep in sync with
// the independently defined constant in lp_oracle.cpp so oracle-equality
// comparisons see the same candidate sets.
constexpr double kFeasTol = 1e-9;

bool all_corner_indices(const std::vector<int>& idx, int q) {
  for (int v : idx)
    if (v != 0 && v != q - 1) return false;
  return true;
}

}  // namespace

std::vector<ParamVector> sample_params(const ParamBox& box, int P) {
  const int d = box.dims();
  if (P < d + 1 || (d == 1 && P < 2))
    throw InvalidInput("sample count must be at least d+1 (and 2 for d=1)");
  std::vector<ParamVector> out;
  out.reserve(P);
  if (d == 1) {
    for (int p = 0; p < P; ++p)
      out.push_back({box.lo[0] + box.width(0) * p / (P - 1)});
    return out;
  }
  // Per-axis grid size q so the grid holds at least P points.
  int q = 2;
  while (std::pow(static_cast<double>(q), d) < static_cast<double>(P)) ++q;
  auto grid_point = [&](const std::vector<int>& idx) {
    ParamVector v(d);
    for (int k = 0; k < d; ++k)
      v[k] = box.lo[k] + box.width(k) * idx[k] / (q - 1);
    return v;
  };
  // Corners first (lexicographic), then the remaining grid points in
  // lexicographic order, truncated at P.
  std::vector<int> idx(d, 0);
  auto advance = [&](int base) {
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < base) return true;
      idx[k] = 0;
    }
    return false;
  };
  do {
    std::vector<int> corner(d);
    for (int k = 0; k < d; ++k) corner[k] = idx[k] == 0 ? 0 : q - 1;
    out.push_back(grid_point(corner));
  } while (static_cast<int>(out.size()) < P && advance(2));
  std::fill(idx.begin(), idx.end(), 0);
  if (static_cast<int>(out.size()) < P) {
    do {
      if (all_corner_indices(idx, q)) continue;
      out.push_back(grid_point(idx));
    } while (static_cast<int>(out.size()) < P && advance(q));
  }
  return out;
}

SampleSet make_samples(const Image& img, const TransformSpec& spec,
                       const ParamBox& box, int P) {
  if (box.dims() != spec.dims())
    throw InvalidInput("parameter box dimension does not match transform");
  check_box(spec, box);
  std::vector<ParamVector> raw = sample_params(box, P);
  SampleSet set{spec, box, {}, {}};
  for (const ParamVector& p : raw) {
    if (std::find(set.params.begin(), set.params.end(), p) != set.params.end())
      continue;  // duplicates appear only on degenerate boxes
    set.params.push_back(p);
  }
  set.images.reserve(set.params.size());
  for (const ParamVector& p : set.params)
    set.images.push_back(transform_image(img, spec, p));
  return set;
}

std::vector<double> residual(const Image& g, const ParamVector& k,
                             const AffineBoundPair& bounds, BoundSide side) {
  if (g.shape().size() != bounds.pixels)
    throw InvalidInput("residual: image size does not match bounds");
  std::vector<double> r(bounds.pixels);
  for (std::size_t pix = 0; pix < bounds.pixels; ++pix) {
    const double v = bounds.value(side, k, pix);
    r[pix] = side == BoundSide::Lower ? g.data()[pix] - v : v - g.data()[pix];
  }
  return r;
}

std::vector<double> bound_objective(const SampleSet& samples,
                                    const AffineBoundPair& bounds,
                                    BoundSide side) {
  const std::size_t npix = samples.pixel_count();
  std::vector<double> obj(npix, 0.0);
  for (int p = 0; p < samples.count(); ++p) {
    const std::vector<double> r = residual(samples.images[p], samples.params[p],
                                           bounds, side);
    for (std::size_t pix = 0; pix < npix; ++pix) obj[pix] += r[pix];
  }
  for (double& v : obj) v /= samples.count();
  return obj;
}

namespace {

// Closed-form 1-d solve for one pixel; `value(p)` already carries the side
// sign (lower bound of value()). Returns {A, B}.
std::pair<double, double> solve_pixel_1d(const std::vector<double>& theta,
                                         const std::vector<double>& g) {
  const int P = static_cast<int>(theta.size());
  double mean_theta = 0.0, mean_g = 0.0;
  for (int p = 0; p < P; ++p) {
    mean_theta += theta[p];
    mean_g += g[p];
  }
  mean_theta /= P;
  mean_g /= P;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  double best_obj = kInf, best_a = 0.0, best_b = 0.0;
  for (int p = 0; p < P; ++p) {
    // Feasible-slope interval for a line anchored at sample p.
    double lo = -kInf, hi = kInf;
    for (int k = 0; k < P; ++k) {
      if (k == p) continue;
      const double slope = (g[k] - g[p]) / (theta[k] - theta[p]);
      if (theta[k] > theta[p]) hi = std::min(hi, slope);
      else lo = std::max(lo, slope);
    }
    // Anchor inside the hull: no feasible line (tolerate rounding noise in
    // the slope interval; the residual check below is the final arbiter).
    if (lo - hi > 1e-10 * (1.0 + std::abs(lo) + std::abs(hi))) continue;
    // Objective is const + A*(theta_p - mean): take the minimizing endpoint,
    // falling back to the other side when the preferred one is unbounded.
    double a;
    if (theta[p] >= mean_theta) a = std::isfinite(lo) ? lo : hi;
    else a = std::isfinite(hi) ? hi : lo;
    if (!std::isfinite(a)) continue;
    const double b = g[p] - a * theta[p];
    // Explicit feasibility check (mirrors the oracle's acceptance rule).
    bool feasible = true;
    for (int k = 0; k < P && feasible; ++k)
      feasible = g[k] - a * theta[k] - b >= -kFeasTol;
    if (!feasible) continue;
    const double obj = (mean_g - g[p]) + a * (theta[p] - mean_theta);
    if (obj < best_obj) {
      best_obj = obj;
      best_a = a;
      best_b = b;
    }
  }
  if (!std::isfinite(best_obj)) {
    // Always-feasible fallback: the flat line through the sample minimum.
    best_a = 0.0;
    best_b = *std::min_element(g.begin(), g.end());
  }
  return {best_a, best_b};
}

void solve_1d(const SampleSet& samples, double sign, std::vector<double>& a_out,
              std::vector<double>& b_out) {
  const int P = samples.count();
  if (P < 2) throw InvalidInput("need at least 2 distinct samples for d=1 bounds");
  const std::size_t npix = samples.pixel_count();
  std::vector<double> theta(P);
  for (int p = 0; p < P; ++p) theta[p] = samples.params[p][0];
  a_out.assign(npix, 0.0);
  b_out.assign(npix, 0.0);
  std::vector<double> g(P);
  for (std::size_t pix = 0; pix < npix; ++pix) {
    bool constant = true;
    for (int p = 0; p < P; ++p) {
      g[p] = sign * samples.pixel(p, pix);
      constant = constant && g[p] == g[0];
    }
    if (constant) {
      a_out[pix] = 0.0;
      b_out[pix] = sign * g[0];
      continue;
    }
    const auto [a, b] = solve_pixel_1d(theta, g);
    a_out[pix] = sign * a;
    b_out[pix] = sign * b;
  }
}

}  // namespace

void lower_bound_1d(const SampleSet& samples, AffineBoundPair& out) {
  if (samples.dims() != 1) throw InvalidInput("lower_bound_1d requires d=1");
  if (out.dims != 1 || out.pixels != samples.pixel_count())
    out = AffineBoundPair(1, samples.pixel_count());
  solve_1d(samples, 1.0, out.a_low, out.b_low);
}

void upper_bound_1d(const SampleSet& samples, AffineBoundPair& out) {
  if (samples.dims() != 1) throw InvalidInput("upper_bound_1d requires d=1");
  if (out.dims != 1 || out.pixels != samples.pixel_count())
    out = AffineBoundPair(1, samples.pixel_count());
  // Lower-bounding -g and negating back gives the upper bound of g.
  solve_1d(samples, -1.0, out.a_up, out.b_up);
}

std::vector<double> subset_k_matrix(const std::vector<ParamVector>& pts) {
  if (pts.size() < 2) throw InvalidInput("subset needs at least 2 points");
  const int d = static_cast<int>(pts.size()) - 1;
  for (const ParamVector& p : pts)
    if (static_cast<int>(p.size()) != d)
      throw InvalidInput("subset points must have dimension (count - 1)");
  std::vector<double> k(static_cast<std::size_t>(d) * d);
  for (int p = 0; p < d; ++p)
    for (int i = 0; i < d; ++i) k[p * d + i] = pts[p][i] - pts[d][i];
  return k;
}

namespace {

// In-place LU factorization with partial pivoting of a d x d row-major
// matrix. Returns false when (numerically) singular.
bool lu_factor(std::vector<double>& m, std::vector<int>& perm, int d) {
  perm.resize(d);
  for (int i = 0; i < d; ++i) perm[i] = i;
  for (int col = 0; col < d; ++col) {
    int pivot = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(m[r * d + col]) > std::abs(m[pivot * d + col])) pivot = r;
    if (std::abs(m[pivot * d + col]) < 1e-12) return false;
    if (pivot != col) {
      for (int c = 0; c < d; ++c) std::swap(m[pivot * d + c], m[col * d + c]);
      std::swap(perm[pivot], perm[col]);
    }
    for (int r = col + 1; r < d; ++r) {
      const double f = m[r * d + col] / m[col * d + col];
      m[r * d + col] = f;
      for (int c = col + 1; c < d; ++c) m[r * d + c] -= f * m[col * d + c];
    }
  }
  return true;
}

void lu_solve(const std::vector<double>& lu, const std::vector<int>& perm,
              int d, const std::vector<double>& rhs, std::vector<double>& x) {
  x.resize(d);
  for (int i = 0; i < d; ++i) x[i] = rhs[perm[i]];
  for (int i = 1; i < d; ++i)
    for (int j = 0; j < i; ++j) x[i] -= lu[i * d + j] * x[j];
  for (int i = d - 1; i >= 0; --i) {
    for (int j = i + 1; j < d; ++j) x[i] -= lu[i * d + j] * x[j];
    x[i] /= lu[i * d + i];
  }
}

// Advance a lexicographic (d+1)-combination of {0..P-1}; false when done.
bool next_combination(std::vector<int>& c, int P) {
  const int k = static_cast<int>(c.size());
  for (int i = k - 1; i >= 0; --i) {
    if (c[i] < P - (k - i)) {
      ++c[i];
      for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

// Full-dimensional subset enumeration for one side (sign applied to pixel
// values as in solve_1d).
void solve_multid(const SampleSet& samples, double sign,
                  std::vector<double>& a_out, std::vector<double>& b_out) {
  const int P = samples.count();
  const int d = samples.dims();
  const std::size_t npix = samples.pixel_count();
  a_out.assign(static_cast<std::size_t>(d) * npix, 0.0);
  b_out.assign(npix, 0.0);

  ParamVector mean_kappa(d, 0.0);
  for (int p = 0; p < P; ++p)
    for (int i = 0; i < d; ++i) mean_kappa[i] += samples.params[p][i];
  for (int i = 0; i < d; ++i) mean_kappa[i] /= P;
  std::vector<double> mean_g(npix, 0.0);
  for (int p = 0; p < P; ++p)
    for (std::size_t pix = 0; pix < npix; ++pix)
      mean_g[pix] += sign * samples.pixel(p, pix);
  for (double& v : mean_g) v /= P;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best_obj(npix, kInf);
  bool any_subset = false;

  std::vector<int> comb(d + 1);
  for (int i = 0; i <= d; ++i) comb[i] = i;
  std::vector<double> lu, rhs(d), a;
  std::vector<int> perm;
  do {
    std::vector<ParamVector> pts(d + 1);
    for (int i = 0; i <= d; ++i) pts[i] = samples.params[comb[i]];
    lu = subset_k_matrix(pts);
    if (!lu_factor(lu, perm, d)) continue;  // affinely dependent subset
    any_subset = true;
    const ParamVector& anchor = pts[d];
    for (std::size_t pix = 0; pix < npix; ++pix) {
      const double g_anchor = sign * samples.pixel(comb[d], pix);
      for (int i = 0; i < d; ++i)
        rhs[i] = sign * samples.pixel(comb[i], pix) - g_anchor;
      lu_solve(lu, perm, d, rhs, a);
      double b = g_anchor;
      for (int i = 0; i < d; ++i) b -= a[i] * anchor[i];
      bool feasible = true;
      for (int p = 0; p < P && feasible; ++p) {
        double v = b;
        for (int i = 0; i < d; ++i) v += a[i] * samples.params[p][i];
        feasible = sign * samples.pixel(p, pix) - v >= -kFeasTol;
      }
      if (!feasible) continue;
      double obj = mean_g[pix] - b;
      for (int i = 0; i < d; ++i) obj -= a[i] * mean_kappa[i];
      if (obj < best_obj[pix]) {
        best_obj[pix] = obj;
        for (int i = 0; i < d; ++i) a_out[i * npix + pix] = sign * a[i];
        b_out[pix] = sign * b;
      }
    }
  } while (next_combination(comb, P));

  if (!any_subset)
    throw InvalidInput("samples contain no affinely independent subset");
  for (std::size_t pix = 0; pix < npix; ++pix) {
    if (std::isfinite(best_obj[pix])) continue;
    // Flat fallback through the pixel's sample minimum (always feasible).
    double m = kInf;
    for (int p = 0; p < P; ++p) m = std::min(m, sign * samples.pixel(p, pix));
    for (int i = 0; i < d; ++i) a_out[i * npix + pix] = 0.0;
    b_out[pix] = sign * m;
  }
}

}  // namespace

AffineBoundPair bound_multid(const SampleSet& samples) {
  const int d = samples.dims();
  const std::size_t npix = samples.pixel_count();
  AffineBoundPair out(d, npix);

  // Dimensions that never vary across the samples carry slope 0 and are
  // excluded from the solve (a degenerate box cannot yield d+1 affinely
  // independent points in the full space).
  std::vector<int> active;
  for (int i = 0; i < d; ++i) {
    bool varies = false;
    for (int p = 1; p < samples.count() && !varies; ++p)
      varies = samples.params[p][i] != samples.params[0][i];
    if (varies) active.push_back(i);
  }
  if (active.empty())
    throw InvalidInput("all sampled parameters coincide; bounds undefined");

  if (static_cast<int>(active.size()) < d) {
    SampleSet reduced{samples.spec, samples.box, {}, samples.images};
    std::vector<double> rlo, rhi;
    for (int i : active) {
      rlo.push_back(samples.box.lo[i]);
      rhi.push_back(samples.box.hi[i]);
    }
    reduced.box = ParamBox(rlo, rhi);
    for (const ParamVector& p : samples.params) {
      ParamVector rp;
      for (int i : active) rp.push_back(p[i]);
      reduced.params.push_back(rp);
    }
    const AffineBoundPair sub = bound_multid(reduced);
    for (std::size_t k = 0; k < active.size(); ++k)
      for (std::size_t pix = 0; pix < npix; ++pix) {
        out.a_low[active[k] * npix + pix] = sub.a_low[k * npix + pix];
        out.a_up[active[k] * npix + pix] = sub.a_up[k * npix + pix];
      }
    out.b_low = sub.b_low;
    out.b_up = sub.b_up;
    return out;
  }

  if (d == 1) {
    lower_bound_1d(samples, out);
    upper_bound_1d(samples, out);
    return out;
  }
  if (samples.count() < d + 1)
    throw InvalidInput("need at least d+1 distinct samples");
  solve_multid(samples, 1.0, out.a_low, out.b_low);
  solve_multid(samples, -1.0, out.a_up, out.b_up);
  return out;
}

}  // namespace geocert
