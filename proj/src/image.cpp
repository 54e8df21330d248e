#include "geocert/image.hpp"

#include <cmath>

#include "geocert/transform.hpp"

namespace geocert {

double bilinear_interpolate(const Image& img, int channel, const Coord& c) {
  if (!std::isfinite(c.x) || !std::isfinite(c.y))
    throw InvalidInput("interpolation coordinate is not finite");
  if (channel < 0 || channel >= img.channels())
    throw InvalidInput("interpolation channel out of range");
  const int n = img.rows();
  const int m = img.cols();
  // Only the (at most) four pixels whose centers lie within distance one of
  // (x, y) carry nonzero weight; everything off-grid reads as zero.
  const int k0 = static_cast<int>(std::floor(c.x));
  const int l0 = static_cast<int>(std::floor(c.y));
  double value = 0.0;
  for (int k = k0; k <= k0 + 1; ++k) {
    if (k < 1 || k > n) continue;
    const double wx = 1.0 - std::abs(c.x - k);
    if (wx <= 0.0) continue;
    for (int l = l0; l <= l0 + 1; ++l) {
      if (l < 1 || l > m) continue;
      const double wy = 1.0 - std::abs(c.y - l);
      if (wy <= 0.0) continue;
      value += img.at(channel, k, l) * wx * wy;
    }
  }
  return value;
}

double pixel_value(const Image& img, const TransformSpec& spec,
                   const ParamVector& params, int i, int j) {
  check_params(spec, params);
  return bilinear_interpolate(img, 0, inverse_map(spec, params, i, j));
}

Image transform_image(const Image& img, const TransformSpec& spec,
                      const ParamVector& params) {
  if (spec.rows != img.rows() || spec.cols != img.cols())
    throw InvalidInput("transform size does not match image");
  check_params(spec, params);
  Image out(img.channels(), img.rows(), img.cols());
  for (int i = 1; i <= img.rows(); ++i) {
    for (int j = 1; j <= img.cols(); ++j) {
      const Coord src = inverse_map(spec, params, i, j);
      for (int c = 0; c < img.channels(); ++c)
        out.at(c, i, j) = bilinear_interpolate(img, c, src);
    }
  }
  return out;
}

}  // namespace geocert
