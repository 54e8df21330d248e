#pragma once

#include <utility>
#include <vector>

#include "geocert/image.hpp"
#include "geocert/interval.hpp"
#include "geocert/sampled_bounds.hpp"
#include "geocert/transform.hpp"

namespace geocert {

// Upper bounds on |d I/dx| and |d I/dy| of one channel's bilinear surface
// over the coordinate box (xbox x ybox): per grid cell the partial along an
// axis is linear in the other coordinate, so the cell bound is the larger
// absolute pixel difference along that axis; out-of-grid neighbours read 0.
std::pair<double, double> interp_gradient_bound(const Image& img, int channel,
                                                const Interval& xbox,
                                                const Interval& ybox);

// Sound per-pixel upper bound on |dr/dk_dim| over the box, where r is the
// residual g_x(k) - (A.k + B): chain rule through the inverse map,
// L = Lx * sup|dx/dk| + Ly * sup|dy/dk| + |A_dim|. `slope_dim` holds the
// per-pixel A_dim values; pass an empty vector for A = 0.
std::vector<double> residual_lipschitz(const Image& img, const TransformSpec& spec,
                                       const std::vector<double>& slope_dim,
                                       const ParamBox& box, int dim);

// Empirical lower bound on the same constant: max finite-difference slope
// of the residual over `samples` dense steps along dim (other dimensions
// held at the box midpoint). Always <= the true Lipschitz constant, so
// residual_lipschitz >= empirical_lipschitz is the soundness check.
std::vector<double> empirical_lipschitz(const Image& img, const TransformSpec& spec,
                                        const AffineBoundPair& bounds,
                                        BoundSide side, const ParamBox& box,
                                        int dim, int samples);

}  // namespace geocert
