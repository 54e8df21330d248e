#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "geocert/image.hpp"

namespace geocert {

enum class LayerKind { Dense, Conv2D, ReLU, Flatten };

// One network layer. Dense and Conv2D carry their parameters; ReLU and
// Flatten are shape markers. Conv geometry not fixed by the parameters
// (input size, output size) is bound when the Network is assembled.
struct Layer {
  LayerKind kind = LayerKind::Flatten;

  // Dense: weights [outputs x inputs] row-major, bias [outputs].
  int inputs = 0;
  int outputs = 0;

  // Conv2D: weights [oc][ic][kh][kw] flattened, bias [oc]; `padding` zero
  // rows/columns on every side, `stride` common to both axes.
  int in_channels = 0, out_channels = 0;
  int kernel_rows = 0, kernel_cols = 0;
  int stride = 1, padding = 0;
  int in_rows = 0, in_cols = 0;    // bound at network assembly
  int out_rows = 0, out_cols = 0;  // derived at network assembly

  std::vector<double> weights;
  std::vector<double> bias;

  static Layer dense(int inputs, int outputs, std::vector<double> weights,
                     std::vector<double> bias);
  static Layer conv2d(int out_channels, int kernel_rows, int kernel_cols,
                      int stride, int padding, std::vector<double> weights,
                      std::vector<double> bias);
  static Layer relu() { return Layer{LayerKind::ReLU}; }
  static Layer flatten() { return Layer{LayerKind::Flatten}; }

  // Flat index into the conv weight block.
  std::size_t w_index(int oc, int ic, int kh, int kw) const {
    return ((static_cast<std::size_t>(oc) * in_channels + ic) * kernel_rows + kh) *
               kernel_cols + kw;
  }
};

// Feedforward network: input image shape plus a shape-checked layer chain.
// The input vector ordering is the Image layout (channel, row, column),
// so Image::data() feeds the first layer directly.
class Network {
public:
  Network(Shape input, std::vector<Layer> layers);

  const Shape& input_shape() const { return input_; }
  std::size_t input_size() const { return input_.size(); }
  int outputs() const { return outputs_; }
  const std::vector<Layer>& layers() const { return layers_; }

  // Per-layer activation width (layer_width(0) = input size,
  // layer_width(i) = output size of layer i-1).
  std::size_t layer_width(std::size_t i) const { return widths_[i]; }

  std::vector<double> forward(const std::vector<double>& x) const;
  std::vector<double> forward(const Image& img) const { return forward(img.data()); }

private:
  Shape input_;
  std::vector<Layer> layers_;
  std::vector<std::size_t> widths_;  // layers_.size() + 1 entries
  int outputs_ = 0;
};

// Exact affine application of one Dense/Conv2D layer.
std::vector<double> apply_affine(const Layer& layer, const std::vector<double>& x);

// Load a network from a JSON manifest (see README for the schema): fields
// input_shape{channels,rows,cols} and layers[], layer types dense / conv /
// relu / flatten / batchnorm. Weights are inline arrays (nested or flat) or
// {offset,count} references into a little-endian float64 sidecar blob named
// by the top-level "blob" entry. Batch-normalization layers are folded into
// the preceding dense/conv layer here and never appear in the result.
Network load_network(const std::string& manifest_path);

}  // namespace geocert
