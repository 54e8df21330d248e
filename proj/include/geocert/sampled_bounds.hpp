#pragma once

#include <cstddef>
#include <vector>

#include "geocert/image.hpp"
#include "geocert/transform.hpp"

namespace geocert {

enum class BoundSide { Lower, Upper };

// Transformed-image samples over a parameter box: images[p] = g_x(params[p]).
// Parameters are pairwise distinct (duplicates are removed on construction,
// which matters for degenerate boxes).
struct SampleSet {
  TransformSpec spec;
  ParamBox box;
  std::vector<ParamVector> params;
  std::vector<Image> images;

  int count() const { return static_cast<int>(params.size()); }
  int dims() const { return box.dims(); }
  std::size_t pixel_count() const {
    return images.empty() ? 0 : images.front().shape().size();
  }
  double pixel(int p, std::size_t pix) const { return images[p].data()[pix]; }
};

// Deterministic parameter sampling: d=1 uses P uniformly spaced values
// including both endpoints; d>=2 uses a ceil(P^(1/d))-per-axis grid listed
// box-corners-first so that truncation to P points keeps d+1 affinely
// independent vectors. Degenerate boxes may yield fewer distinct points.
std::vector<ParamVector> sample_params(const ParamBox& box, int P);

SampleSet make_samples(const Image& img, const TransformSpec& spec,
                       const ParamBox& box, int P);

// Per-pixel affine bounds: slopes indexed [dim * pixel_count + pixel],
// intercepts indexed [pixel]. Bounds hold at the generating samples only;
// the mesh corrections make them sound over the whole box.
struct AffineBoundPair {
  int dims = 0;
  std::size_t pixels = 0;
  std::vector<double> a_low, a_up;  // dims * pixels
  std::vector<double> b_low, b_up;  // pixels

  AffineBoundPair() = default;
  AffineBoundPair(int d, std::size_t n)
      : dims(d), pixels(n), a_low(d * n, 0.0), a_up(d * n, 0.0),
        b_low(n, 0.0), b_up(n, 0.0) {}

  double slope(BoundSide side, int dim, std::size_t pix) const {
    return (side == BoundSide::Lower ? a_low : a_up)[dim * pixels + pix];
  }
  double intercept(BoundSide side, std::size_t pix) const {
    return (side == BoundSide::Lower ? b_low : b_up)[pix];
  }
  // A.k + B for one pixel
  double value(BoundSide side, const ParamVector& k, std::size_t pix) const {
    double v = intercept(side, pix);
    for (int d = 0; d < dims; ++d) v += slope(side, d, pix) * k[d];
    return v;
  }
};

// Per-pixel residual of the affine bound at parameter k against the exact
// transformed image g = g_x(k). Lower: g - (A.k + B); upper: (A.k + B) - g.
// Nonnegative residual means the bound holds at k.
std::vector<double> residual(const Image& g, const ParamVector& k,
                             const AffineBoundPair& bounds, BoundSide side);

// Step 1-bis closed form for d=1: per pixel and per anchor sample, the
// feasible-slope interval, the endpoint selected by the objective's sign
// in (theta_p - mean theta), and the argmin over anchors. The result
// satisfies every sample constraint and touches at least one sample.
void lower_bound_1d(const SampleSet& samples, AffineBoundPair& out);
void upper_bound_1d(const SampleSet& samples, AffineBoundPair& out);

// General Step 1-bis: subset enumeration for d >= 2 (delegating to the 1-d
// routines when only one dimension varies), both sides. Dimensions that are
// constant across the samples get slope 0 and are excluded from the solve.
AffineBoundPair bound_multid(const SampleSet& samples);

// The d x d elimination matrix for one candidate subset of d+1 points:
// row p holds pts[p] - pts[d]. Singular when the subset is affinely
// dependent.
std::vector<double> subset_k_matrix(const std::vector<ParamVector>& pts);

// Mean-residual objective of a bound over the samples, per pixel.
std::vector<double> bound_objective(const SampleSet& samples,
                                    const AffineBoundPair& bounds,
                                    BoundSide side);

// Independent exact solver of the sampled LP (minimize mean residual
// subject to residual >= 0 at every sample) by brute-force enumeration of
// basic solutions. Shares no helpers with the routines above; used as the
// correctness oracle for Step 1-bis. Returns per-pixel (A, B) packed like
// AffineBoundPair and the per-pixel optimal objective.
struct LpSolution {
  int dims = 0;
  std::size_t pixels = 0;
  std::vector<double> a;  // dims * pixels
  std::vector<double> b;  // pixels
  std::vector<double> objective;  // pixels
};
LpSolution lp_oracle(const SampleSet& samples, BoundSide side);

}  // namespace geocert
