#include "geocert/lipschitz.hpp"

#include <algorithm>
#include <cmath>

namespace geocert {

namespace {

// Pixel accessor with zero padding outside the grid.
double padded(const Image& img, int channel, int k, int l) {
  if (k < 1 || k > img.rows() || l < 1 || l > img.cols()) return 0.0;
  return img.at(channel, k, l);
}

}  // namespace

std::pair<double, double> interp_gradient_bound(const Image& img, int channel,
                                                const Interval& xbox,
                                                const Interval& ybox) {
  if (!std::isfinite(xbox.lo) || !std::isfinite(xbox.hi) ||
      !std::isfinite(ybox.lo) || !std::isfinite(ybox.hi))
    throw InvalidInput("interp_gradient_bound: coordinate box is not finite");
  // Cell [k,k+1]x[l,l+1]; outside cells [0 .. n] x [0 .. m] the surface is
  // identically zero, so clamp the scan there.
  const int klo = std::max(0, static_cast<int>(std::floor(xbox.lo)));
  const int khi = std::min(img.rows(), static_cast<int>(std::floor(xbox.hi)));
  const int llo = std::max(0, static_cast<int>(std::floor(ybox.lo)));
  const int lhi = std::min(img.cols(), static_cast<int>(std::floor(ybox.hi)));
  double lx = 0.0, ly = 0.0;
  for (int k = klo; k <= khi; ++k) {
    for (int l = llo; l <= lhi; ++l) {
      const double p00 = padded(img, channel, k, l);
      const double p10 = padded(img, channel, k + 1, l);
      const double p01 = padded(img, channel, k, l + 1);
      const double p11 = padded(img, channel, k + 1, l + 1);
      lx = std::max({lx, std::abs(p10 - p00), std::abs(p11 - p01)});
      ly = std::max({ly, std::abs(p01 - p00), std::abs(p11 - p10)});
    }
  }
  return {lx, ly};
}

std::vector<double> residual_lipschitz(const Image& img, const TransformSpec& spec,
                                       const std::vector<double>& slope_dim,
                                       const ParamBox& box, int dim) {
  check_box(spec, box);
  if (dim < 0 || dim >= spec.dims())
    throw InvalidInput("residual_lipschitz: dimension out of range");
  const std::size_t npix = img.shape().size();
  if (!slope_dim.empty() && slope_dim.size() != npix)
    throw InvalidInput("residual_lipschitz: slope tensor size mismatch");
  std::vector<double> out(npix);
  for (int i = 1; i <= img.rows(); ++i) {
    for (int j = 1; j <= img.cols(); ++j) {
      const auto [xr, yr] = inverse_map_enclosure(spec, box, i, j);
      const auto [dxr, dyr] = inverse_map_derivative_enclosure(spec, box, i, j, dim);
      for (int c = 0; c < img.channels(); ++c) {
        const auto [lx, ly] = interp_gradient_bound(img, c, xr, yr);
        const double lg = lx * dxr.abs_sup() + ly * dyr.abs_sup();
        const std::size_t pix = img.shape().index(c, i, j);
        out[pix] = lg + (slope_dim.empty() ? 0.0 : std::abs(slope_dim[pix]));
      }
    }
  }
  return out;
}

std::vector<double> empirical_lipschitz(const Image& img, const TransformSpec& spec,
                                        const AffineBoundPair& bounds,
                                        BoundSide side, const ParamBox& box,
                                        int dim, int samples) {
  check_box(spec, box);
  if (samples < 2) throw InvalidInput("empirical_lipschitz needs >= 2 samples");
  if (dim < 0 || dim >= spec.dims())
    throw InvalidInput("empirical_lipschitz: dimension out of range");
  const std::size_t npix = img.shape().size();
  if (bounds.pixels != npix)
    throw InvalidInput("empirical_lipschitz: bounds size mismatch");
  const double step = box.width(dim) / (samples - 1);
  std::vector<double> out(npix, 0.0);
  if (step == 0.0) return out;
  ParamVector k = box.midpoint();
  k[dim] = box.lo[dim];
  std::vector<double> prev = residual(transform_image(img, spec, k), k, bounds, side);
  for (int s = 1; s < samples; ++s) {
    k[dim] = box.lo[dim] + step * s;
    const std::vector<double> cur =
        residual(transform_image(img, spec, k), k, bounds, side);
    for (std::size_t pix = 0; pix < npix; ++pix)
      out[pix] = std::max(out[pix], std::abs(cur[pix] - prev[pix]) / step);
    prev = cur;
  }
  return out;
}

}  // namespace geocert
