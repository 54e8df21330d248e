#pragma once

#include <cstddef>
#include <vector>

#include "geocert/errors.hpp"

namespace geocert {

struct TransformSpec;
using ParamVector = std::vector<double>;

// Pixel-center coordinate convention: pixel (i,j) of an n x m channel sits
// at integer coordinates (i,j), i in 1..n (row axis, x), j in 1..m (column
// axis, y). Coordinates outside the grid are legal; interpolation treats
// missing neighbours as zero.
struct Coord {
  double x = 0.0;
  double y = 0.0;
};

struct Shape {
  int channels = 0;
  int rows = 0;  // n
  int cols = 0;  // m

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * rows * cols;
  }
  // flat index of (channel, row i, col j), i and j 1-based
  std::size_t index(int c, int i, int j) const {
    return (static_cast<std::size_t>(c) * rows + (i - 1)) * cols + (j - 1);
  }
  bool operator==(const Shape&) const = default;
};

// Channel-separated pixel grid. Values are unitless intensities; the file
// loaders guarantee [0,1], in-memory construction does not (tests use wider
// ranges on purpose).
class Image {
public:
  Image() = default;
  Image(int channels, int rows, int cols, double fill = 0.0)
      : shape_{channels, rows, cols}, data_(shape_.size(), fill) {
    if (channels < 1 || rows < 1 || cols < 1)
      throw InvalidInput("image dimensions must be positive");
  }
  Image(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (shape.channels < 1 || shape.rows < 1 || shape.cols < 1)
      throw InvalidInput("image dimensions must be positive");
    if (data_.size() != shape_.size())
      throw InvalidInput("image data size does not match shape");
  }

  const Shape& shape() const { return shape_; }
  int channels() const { return shape_.channels; }
  int rows() const { return shape_.rows; }
  int cols() const { return shape_.cols; }

  double at(int c, int i, int j) const { return data_[shape_.index(c, i, j)]; }
  double& at(int c, int i, int j) { return data_[shape_.index(c, i, j)]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

private:
  Shape shape_;
  std::vector<double> data_;
};

// Bilinear interpolation of one channel at an arbitrary coordinate.
// Off-grid neighbours contribute zero, so the result fades to 0 within one
// pixel of the border.
double bilinear_interpolate(const Image& img, int channel, const Coord& c);

// Pixel (i,j) of the transformed image: interpolate at the inverse-mapped
// source coordinate.
double pixel_value(const Image& img, const TransformSpec& spec,
                   const ParamVector& params, int i, int j);

// Apply pixel_value at every (channel, i, j); dimensions are preserved.
Image transform_image(const Image& img, const TransformSpec& spec,
                      const ParamVector& params);

}  // namespace geocert
