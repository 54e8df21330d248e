#pragma once

#include <cstdint>
#include <vector>

#include "geocert/image.hpp"
#include "geocert/lipschitz.hpp"
#include "geocert/sampled_bounds.hpp"
#include "geocert/transform.hpp"

namespace geocert {

// Sound per-pixel linear relaxation of g_x over a parameter box:
//   A_low.k + B_low + delta_low <= g_x(k) <= A_up.k + B_up + delta_up
// for every k in the box, with delta_low <= 0 <= delta_up.
struct LinearRelaxation {
  TransformSpec spec;
  ParamBox box;
  Shape shape;
  AffineBoundPair bounds;
  std::vector<double> delta_low, delta_up;  // per pixel
  int samples = 0;       // P used for Step 1-bis
  int subdivisions = 0;  // N used for the Step 3-bis mesh
  bool per_cell_lipschitz = true;

  std::size_t pixel_count() const { return shape.size(); }
  int dims() const { return box.dims(); }

  // Corrected bound values at one parameter point.
  double lower_at(const ParamVector& k, std::size_t pix) const {
    return bounds.value(BoundSide::Lower, k, pix) + delta_low[pix];
  }
  double upper_at(const ParamVector& k, std::size_t pix) const {
    return bounds.value(BoundSide::Upper, k, pix) + delta_up[pix];
  }
  // Concrete per-pixel interval over the whole box (affine extremes at the
  // box corners plus the corrections).
  Interval concretize(std::size_t pix) const;
};

struct RelaxationOptions {
  int samples = 10;              // P
  int subdivisions = 0;          // N; 0 means derive from epsilon
  double epsilon = 0.0;          // target correction slack when N not given
  bool per_cell_lipschitz = true;
  bool interval_domain = false;  // force A = 0 (the IBP special case)
  std::int64_t cell_budget = 1000000;
};

// Mesh size rule N = ceil(L_max * width / (2 epsilon)), at least 1.
int choose_subdivisions(double l_max, double width, double epsilon);

// Step 3-bis correction for d=1: split the box into N equal sub-intervals,
// certify each from its midpoint residual and (optionally per-sub-interval)
// Lipschitz bound, take the worst, clamp to the sign-correct half-line.
std::vector<double> correction_1d(const Image& img, const TransformSpec& spec,
                                  const AffineBoundPair& bounds,
                                  const ParamBox& box, int N, BoundSide side,
                                  bool per_cell_lipschitz = true);

// Multi-dimensional mesh of N^d cells; per-cell Lipschitz refinement is
// optional (whole-box constants by default).
std::vector<double> correction_multid(const Image& img, const TransformSpec& spec,
                                      const AffineBoundPair& bounds,
                                      const ParamBox& box, int N, BoundSide side,
                                      bool per_cell_lipschitz = false,
                                      std::int64_t cell_budget = 1000000);

// Full Step 1-bis -> 2-bis -> 3-bis pipeline.
LinearRelaxation build_relaxation(const Image& img, const TransformSpec& spec,
                                  const ParamBox& box,
                                  const RelaxationOptions& opt = {});

// Empirical validator of the soundness guarantee: sample the box (corners,
// center, then a fixed-seed uniform stream), evaluate g_x exactly, count
// bound violations beyond the tolerance.
struct SoundnessReport {
  std::int64_t samples = 0;
  std::int64_t violations = 0;
  double worst = 0.0;        // largest violation magnitude found
  std::size_t worst_pixel = 0;
  ParamVector worst_param;
};
SoundnessReport check_soundness(const LinearRelaxation& relax, const Image& img,
                                std::int64_t samples, double tolerance = 1e-9);

}  // namespace geocert
