#include "geocert/network.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <utility>

#include "json.hpp"

namespace geocert {

namespace {

// Shape of the value flowing between layers: spatial until a Flatten or
// Dense consumes it, flat afterwards.
struct FlowShape {
  bool spatial = true;
  int channels = 0, rows = 0, cols = 0;
  std::size_t size = 0;
};

int conv_extent(int in, int kernel, int stride, int padding) {
  const int span = in + 2 * padding - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

}  // namespace

Layer Layer::dense(int inputs, int outputs, std::vector<double> weights,
                   std::vector<double> bias) {
  if (inputs < 1 || outputs < 1)
    throw InvalidInput("dense layer needs positive input and output counts");
  if (weights.size() != static_cast<std::size_t>(inputs) * outputs)
    throw InvalidInput("dense weight count does not match inputs x outputs");
  if (bias.size() != static_cast<std::size_t>(outputs))
    throw InvalidInput("dense bias length does not match outputs");
  Layer l{LayerKind::Dense};
  l.inputs = inputs;
  l.outputs = outputs;
  l.weights = std::move(weights);
  l.bias = std::move(bias);
  return l;
}

Layer Layer::conv2d(int out_channels, int kernel_rows, int kernel_cols,
                    int stride, int padding, std::vector<double> weights,
                    std::vector<double> bias) {
  if (out_channels < 1 || kernel_rows < 1 || kernel_cols < 1)
    throw InvalidInput("conv layer needs positive filter and kernel sizes");
  if (stride < 1 || padding < 0)
    throw InvalidInput("conv stride must be >= 1 and padding >= 0");
  if (bias.size() != static_cast<std::size_t>(out_channels))
    throw InvalidInput("conv bias length does not match filter count");
  Layer l{LayerKind::Conv2D};
  l.out_channels = out_channels;
  l.kernel_rows = kernel_rows;
  l.kernel_cols = kernel_cols;
  l.stride = stride;
  l.padding = padding;
  l.weights = std::move(weights);
  l.bias = std::move(bias);
  return l;
}

Network::Network(Shape input, std::vector<Layer> layers)
    : input_(input), layers_(std::move(layers)) {
  if (input.channels < 1 || input.rows < 1 || input.cols < 1)
    throw InvalidInput("network input shape must be positive");
  FlowShape flow{true, input.channels, input.rows, input.cols, input.size()};
  widths_.push_back(flow.size);

  for (Layer& layer : layers_) {
    switch (layer.kind) {
      case LayerKind::Dense:
        if (static_cast<std::size_t>(layer.inputs) != flow.size)
          throw InvalidInput("dense layer input count does not match the chain");
        flow = {false, 0, 0, 0, static_cast<std::size_t>(layer.outputs)};
        break;
      case LayerKind::Conv2D: {
        if (!flow.spatial)
          throw InvalidInput("conv layer requires a spatial input");
        layer.in_channels = flow.channels;
        layer.in_rows = flow.rows;
        layer.in_cols = flow.cols;
        layer.out_rows =
            conv_extent(flow.rows, layer.kernel_rows, layer.stride, layer.padding);
        layer.out_cols =
            conv_extent(flow.cols, layer.kernel_cols, layer.stride, layer.padding);
        if (layer.out_rows < 1 || layer.out_cols < 1)
          throw InvalidInput("conv kernel does not fit the input");
        const std::size_t expect = static_cast<std::size_t>(layer.out_channels) *
                                   layer.in_channels * layer.kernel_rows *
                                   layer.kernel_cols;
        if (layer.weights.size() != expect)
          throw InvalidInput("conv weight count does not match the chain");
        flow = {true, layer.out_channels, layer.out_rows, layer.out_cols,
                static_cast<std::size_t>(layer.out_channels) * layer.out_rows *
                    layer.out_cols};
        break;
      }
      case LayerKind::ReLU:
        break;  // shape preserved
      case LayerKind::Flatten:
        flow = {false, 0, 0, 0, flow.size};
        break;
    }
    widths_.push_back(flow.size);
  }
  outputs_ = static_cast<int>(flow.size);
  if (outputs_ < 1) throw InvalidInput("network has no outputs");
}

std::vector<double> apply_affine(const Layer& layer, const std::vector<double>& x) {
  if (layer.kind == LayerKind::Dense) {
    std::vector<double> y(layer.outputs);
    for (int o = 0; o < layer.outputs; ++o) {
      double acc = layer.bias[o];
      const double* row = layer.weights.data() +
                          static_cast<std::size_t>(o) * layer.inputs;
      for (int i = 0; i < layer.inputs; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
    return y;
  }
  if (layer.kind != LayerKind::Conv2D)
    throw InvalidInput("apply_affine expects a dense or conv layer");
  const Layer& l = layer;
  std::vector<double> y(static_cast<std::size_t>(l.out_channels) * l.out_rows *
                        l.out_cols);
  std::size_t out = 0;
  for (int oc = 0; oc < l.out_channels; ++oc)
    for (int oi = 0; oi < l.out_rows; ++oi)
      for (int oj = 0; oj < l.out_cols; ++oj, ++out) {
        double acc = l.bias[oc];
        for (int ic = 0; ic < l.in_channels; ++ic)
          for (int kh = 0; kh < l.kernel_rows; ++kh) {
            const int ii = oi * l.stride - l.padding + kh;
            if (ii < 0 || ii >= l.in_rows) continue;
            for (int kw = 0; kw < l.kernel_cols; ++kw) {
              const int jj = oj * l.stride - l.padding + kw;
              if (jj < 0 || jj >= l.in_cols) continue;
              const std::size_t in =
                  (static_cast<std::size_t>(ic) * l.in_rows + ii) * l.in_cols + jj;
              acc += l.weights[l.w_index(oc, ic, kh, kw)] * x[in];
            }
          }
        y[out] = acc;
      }
  return y;
}

std::vector<double> Network::forward(const std::vector<double>& x) const {
  if (x.size() != input_size())
    throw InvalidInput("forward input size does not match the network");
  std::vector<double> v = x;
  for (const Layer& layer : layers_) {
    switch (layer.kind) {
      case LayerKind::Dense:
      case LayerKind::Conv2D:
        v = apply_affine(layer, v);
        break;
      case LayerKind::ReLU:
        for (double& t : v) t = t > 0.0 ? t : 0.0;
        break;
      case LayerKind::Flatten:
        break;
    }
  }
  return v;
}

namespace {

using nlohmann::json;

// Flatten an arbitrarily nested numeric JSON array.
void flatten_numbers(const json& node, std::vector<double>& out) {
  if (node.is_number()) {
    out.push_back(node.get<double>());
    return;
  }
  if (!node.is_array())
    throw InvalidInput("network manifest: weight entries must be numbers");
  for (const json& child : node) flatten_numbers(child, out);
}

struct BlobFile {
  std::string path;  // empty when absent
  std::ifstream stream;
};

// Read `field` of a layer: inline array or {offset,count} blob reference.
std::vector<double> read_values(const json& layer, const std::string& field,
                                BlobFile& blob) {
  std::vector<double> out;
  if (layer.contains(field)) {
    flatten_numbers(layer.at(field), out);
    return out;
  }
  const std::string ref = field + "_ref";
  if (!layer.contains(ref))
    throw InvalidInput("network manifest: layer is missing '" + field + "'");
  const json& r = layer.at(ref);
  if (!r.contains("offset") || !r.contains("count"))
    throw InvalidInput("network manifest: blob reference needs offset and count");
  if (blob.path.empty())
    throw InvalidInput("network manifest: blob reference without a 'blob' file");
  const std::uint64_t offset = r.at("offset").get<std::uint64_t>();
  const std::uint64_t count = r.at("count").get<std::uint64_t>();
  out.resize(count);
  blob.stream.clear();
  blob.stream.seekg(static_cast<std::streamoff>(offset));
  blob.stream.read(reinterpret_cast<char*>(out.data()),
                   static_cast<std::streamsize>(count * sizeof(double)));
  if (!blob.stream)
    throw IoError("network blob read failed: " + blob.path);
  return out;
}

// Fold y = gamma * (x - mean) / sqrt(var + eps) + beta into the preceding
// affine layer's per-channel (conv) or per-neuron (dense) weights.
void fold_batchnorm(Layer& prev, const json& bn, BlobFile& blob) {
  const std::vector<double> mean = read_values(bn, "mean", blob);
  const std::vector<double> variance = read_values(bn, "variance", blob);
  const double eps = bn.value("epsilon", 1e-5);
  const std::size_t n = mean.size();
  std::vector<double> gamma(n, 1.0), beta(n, 0.0);
  if (bn.contains("gamma") || bn.contains("gamma_ref"))
    gamma = read_values(bn, "gamma", blob);
  if (bn.contains("beta") || bn.contains("beta_ref"))
    beta = read_values(bn, "beta", blob);
  const std::size_t units = prev.kind == LayerKind::Dense
                                ? static_cast<std::size_t>(prev.outputs)
                                : static_cast<std::size_t>(prev.out_channels);
  if (variance.size() != n || gamma.size() != n || beta.size() != n || n != units)
    throw InvalidInput("batchnorm statistics do not match the preceding layer");

  for (std::size_t u = 0; u < n; ++u) {
    if (!(variance[u] + eps > 0.0))
      throw InvalidInput("batchnorm variance must keep var + eps positive");
    const double scale = gamma[u] / std::sqrt(variance[u] + eps);
    const std::size_t block = prev.weights.size() / units;
    for (std::size_t w = 0; w < block; ++w) prev.weights[u * block + w] *= scale;
    prev.bias[u] = scale * (prev.bias[u] - mean[u]) + beta[u];
  }
}

}  // namespace

Network load_network(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open network manifest: " + manifest_path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError("network manifest is not valid JSON: " + std::string(e.what()));
  }

  try {
    const json& shape = doc.at("input_shape");
    const Shape input{shape.at("channels").get<int>(), shape.at("rows").get<int>(),
                      shape.at("cols").get<int>()};

    BlobFile blob;
    if (doc.contains("blob")) {
      const std::filesystem::path base =
          std::filesystem::path(manifest_path).parent_path();
      blob.path = (base / doc.at("blob").get<std::string>()).string();
      blob.stream.open(blob.path, std::ios::binary);
      if (!blob.stream) throw IoError("cannot open network blob: " + blob.path);
    }

    std::vector<Layer> layers;
    for (const json& entry : doc.at("layers")) {
      const std::string type = entry.at("type").get<std::string>();
      if (type == "dense") {
        std::vector<double> bias = read_values(entry, "bias", blob);
        std::vector<double> weights = read_values(entry, "weights", blob);
        const int outputs = static_cast<int>(bias.size());
        if (outputs < 1 || weights.size() % outputs != 0)
          throw InvalidInput("dense weight count is not a multiple of the bias length");
        const int inputs = static_cast<int>(weights.size()) / outputs;
        layers.push_back(Layer::dense(inputs, outputs, std::move(weights),
                                      std::move(bias)));
      } else if (type == "conv") {
        std::vector<double> bias = read_values(entry, "bias", blob);
        std::vector<double> weights = read_values(entry, "weights", blob);
        int kh = 0, kw = 0;
        const json& kernel = entry.at("kernel");
        if (kernel.is_array()) {
          kh = kernel.at(0).get<int>();
          kw = kernel.at(1).get<int>();
        } else {
          kh = kw = kernel.get<int>();
        }
        const int filters = static_cast<int>(bias.size());
        layers.push_back(Layer::conv2d(filters, kh, kw, entry.value("stride", 1),
                                       entry.value("padding", 0),
                                       std::move(weights), std::move(bias)));
      } else if (type == "relu") {
        layers.push_back(Layer::relu());
      } else if (type == "flatten") {
        layers.push_back(Layer::flatten());
      } else if (type == "batchnorm") {
        if (layers.empty() || (layers.back().kind != LayerKind::Dense &&
                               layers.back().kind != LayerKind::Conv2D))
          throw InvalidInput("batchnorm must follow a dense or conv layer");
        fold_batchnorm(layers.back(), entry, blob);
      } else {
        throw InvalidInput("unknown network layer type: " + type);
      }
    }
    return Network(input, std::move(layers));
  } catch (const json::exception& e) {
    throw InvalidInput("network manifest field error: " + std::string(e.what()));
  }
}

}  // namespace geocert
