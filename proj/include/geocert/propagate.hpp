#pragma once

#include <string>
#include <vector>

#include "geocert/network.hpp"
#include "geocert/relaxation.hpp"

namespace geocert {

enum class VerifyMethod { Ibp, Crown, CrownIbp };

const char* verify_method_name(VerifyMethod m);
VerifyMethod verify_method_from_name(const std::string& name);

// Symbolic affine output bounds over the transform parameters:
//   a_low.k + b_low <= output <= a_up.k + b_up   for every k in the box.
struct ParamLinearForm {
  int dims = 0;
  std::size_t outputs = 0;
  std::vector<double> a_low, a_up;  // outputs x dims, row-major per output
  std::vector<double> b_low, b_up;  // outputs

  double lower_value(const ParamVector& k, std::size_t out) const {
    double v = b_low[out];
    for (int d = 0; d < dims; ++d) v += a_low[out * dims + d] * k[d];
    return v;
  }
  double upper_value(const ParamVector& k, std::size_t out) const {
    double v = b_up[out];
    for (int d = 0; d < dims; ++d) v += a_up[out * dims + d] * k[d];
    return v;
  }
  // Extremes of the two affine forms over the box.
  Interval concretize(const ParamBox& box, std::size_t out) const;
};

// Concrete per-output bounds; the backward (CROWN) methods also carry the
// symbolic forms they concretized. The concrete intervals of the backward
// methods are intersected with an interval (IBP) pre-pass, so they are
// never looser than ibp_forward's.
struct BoundResult {
  std::vector<double> lower, upper;
  ParamLinearForm forms;
  bool has_forms = false;
};

// Interval bound propagation: concretize the relaxation per pixel, then
// push intervals through every layer with standard rules.
BoundResult ibp_forward(const Network& net, const LinearRelaxation& relax);

// Backward linear relaxation through the network with the geometric
// relaxation substituted as the (symbolic) input layer. Pre-activation
// intervals come from an IBP pre-pass by default; `full_crown` replaces
// them with per-layer backward passes (tighter, slower). Stable ReLUs are
// exact; unstable ones use the chord upper line and the area-minimizing
// 0/1 lower slope.
BoundResult crown_backward(const Network& net, const LinearRelaxation& relax,
                           bool full_crown = false);

// Lower bounds on the class-difference functionals f_label - f_i (one per
// i != label, in ascending i order), bound in one backward pass for the
// CROWN methods (tighter than subtracting per-class bounds) or via
// interval arithmetic for Ibp. The certification margin is their minimum.
std::vector<double> class_difference_lower(const Network& net,
                                           const LinearRelaxation& relax,
                                           int label, VerifyMethod method);

// Eq.-(8) margin from per-class bounds: min over i != label of
// (lower_label - upper_i); positive means certified.
double robustness_margin(const BoundResult& bounds, int label);

}  // namespace geocert
