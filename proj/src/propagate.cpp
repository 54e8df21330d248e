#include "geocert/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geocert {

const char* verify_method_name(VerifyMethod m) {
  switch (m) {
    case VerifyMethod::Ibp: return "ibp";
    case VerifyMethod::Crown: return "crown";
    case VerifyMethod::CrownIbp: return "crown-ibp";
  }
  throw InvalidInput("unknown verify method");
}

VerifyMethod verify_method_from_name(const std::string& name) {
  if (name == "ibp") return VerifyMethod::Ibp;
  if (name == "crown") return VerifyMethod::Crown;
  if (name == "crown-ibp") return VerifyMethod::CrownIbp;
  throw InvalidInput("unknown verify method: " + name);
}

Interval ParamLinearForm::concretize(const ParamBox& box, std::size_t out) const {
  double lo = b_low[out], hi = b_up[out];
  for (int d = 0; d < dims; ++d) {
    const double al = a_low[out * dims + d];
    const double au = a_up[out * dims + d];
    lo += std::min(al * box.lo[d], al * box.hi[d]);
    hi += std::max(au * box.lo[d], au * box.hi[d]);
  }
  return {lo, hi};
}

namespace {

struct IntervalVec {
  std::vector<double> lo, hi;
  std::size_t size() const { return lo.size(); }
};

// Interval transformer of one affine layer: split each weight by sign.
IntervalVec affine_interval(const Layer& layer, const IntervalVec& in) {
  const std::size_t n = layer.kind == LayerKind::Dense
                            ? static_cast<std::size_t>(layer.outputs)
                            : static_cast<std::size_t>(layer.out_channels) *
                                  layer.out_rows * layer.out_cols;
  IntervalVec out{std::vector<double>(n), std::vector<double>(n)};
  auto accumulate = [&](std::size_t o, double w, std::size_t i) {
    if (w >= 0.0) {
      out.lo[o] += w * in.lo[i];
      out.hi[o] += w * in.hi[i];
    } else {
      out.lo[o] += w * in.hi[i];
      out.hi[o] += w * in.lo[i];
    }
  };
  if (layer.kind == LayerKind::Dense) {
    for (int o = 0; o < layer.outputs; ++o) {
      out.lo[o] = out.hi[o] = layer.bias[o];
      const double* row =
          layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
      for (int i = 0; i < layer.inputs; ++i)
        accumulate(o, row[i], static_cast<std::size_t>(i));
    }
    return out;
  }
  const Layer& l = layer;
  std::size_t o = 0;
  for (int oc = 0; oc < l.out_channels; ++oc)
    for (int oi = 0; oi < l.out_rows; ++oi)
      for (int oj = 0; oj < l.out_cols; ++oj, ++o) {
        out.lo[o] = out.hi[o] = l.bias[oc];
        for (int ic = 0; ic < l.in_channels; ++ic)
          for (int kh = 0; kh < l.kernel_rows; ++kh) {
            const int ii = oi * l.stride - l.padding + kh;
            if (ii < 0 || ii >= l.in_rows) continue;
            for (int kw = 0; kw < l.kernel_cols; ++kw) {
              const int jj = oj * l.stride - l.padding + kw;
              if (jj < 0 || jj >= l.in_cols) continue;
              accumulate(o, l.weights[l.w_index(oc, ic, kh, kw)],
                         (static_cast<std::size_t>(ic) * l.in_rows + ii) * l.in_cols +
                             jj);
            }
          }
      }
  return out;
}

// Interval state at every layer boundary: boundary i is the input of
// layer i; the last boundary is the network output.
std::vector<IntervalVec> ibp_boundaries(const Network& net,
                                        const LinearRelaxation& relax) {
  if (relax.shape != net.input_shape())
    throw InvalidInput("relaxation shape does not match the network input");
  std::vector<IntervalVec> at(net.layers().size() + 1);
  const std::size_t npix = relax.pixel_count();
  at[0].lo.resize(npix);
  at[0].hi.resize(npix);
  for (std::size_t pix = 0; pix < npix; ++pix) {
    const Interval hull = relax.concretize(pix);
    at[0].lo[pix] = hull.lo;
    at[0].hi[pix] = hull.hi;
  }
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = net.layers()[i];
    switch (layer.kind) {
      case LayerKind::Dense:
      case LayerKind::Conv2D:
        at[i + 1] = affine_interval(layer, at[i]);
        break;
      case LayerKind::ReLU:
        at[i + 1] = at[i];
        for (double& v : at[i + 1].lo) v = std::max(0.0, v);
        for (double& v : at[i + 1].hi) v = std::max(0.0, v);
        break;
      case LayerKind::Flatten:
        at[i + 1] = at[i];
        break;
    }
  }
  return at;
}

// Backward substitution state: lower/upper functional coefficients over
// the activations at the current boundary.
struct BackwardState {
  std::size_t rows = 0, width = 0;
  std::vector<double> a_low, a_up;  // rows x width
  std::vector<double> b_low, b_up;  // rows
};

void substitute_affine(const Layer& layer, BackwardState& s) {
  const std::size_t in_width =
      layer.kind == LayerKind::Dense
          ? static_cast<std::size_t>(layer.inputs)
          : static_cast<std::size_t>(layer.in_channels) * layer.in_rows *
                layer.in_cols;
  std::vector<double> a_low(s.rows * in_width, 0.0);
  std::vector<double> a_up(s.rows * in_width, 0.0);
  for (std::size_t r = 0; r < s.rows; ++r) {
    const double* row_low = s.a_low.data() + r * s.width;
    const double* row_up = s.a_up.data() + r * s.width;
    double* out_low = a_low.data() + r * in_width;
    double* out_up = a_up.data() + r * in_width;
    if (layer.kind == LayerKind::Dense) {
      for (int o = 0; o < layer.outputs; ++o) {
        const double cl = row_low[o], cu = row_up[o];
        s.b_low[r] += cl * layer.bias[o];
        s.b_up[r] += cu * layer.bias[o];
        if (cl == 0.0 && cu == 0.0) continue;
        const double* w =
            layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
        for (int i = 0; i < layer.inputs; ++i) {
          out_low[i] += cl * w[i];
          out_up[i] += cu * w[i];
        }
      }
    } else {
      const Layer& l = layer;
      std::size_t o = 0;
      for (int oc = 0; oc < l.out_channels; ++oc)
        for (int oi = 0; oi < l.out_rows; ++oi)
          for (int oj = 0; oj < l.out_cols; ++oj, ++o) {
            const double cl = row_low[o], cu = row_up[o];
            s.b_low[r] += cl * l.bias[oc];
            s.b_up[r] += cu * l.bias[oc];
            if (cl == 0.0 && cu == 0.0) continue;
            for (int ic = 0; ic < l.in_channels; ++ic)
              for (int kh = 0; kh < l.kernel_rows; ++kh) {
                const int ii = oi * l.stride - l.padding + kh;
                if (ii < 0 || ii >= l.in_rows) continue;
                for (int kw = 0; kw < l.kernel_cols; ++kw) {
                  const int jj = oj * l.stride - l.padding + kw;
                  if (jj < 0 || jj >= l.in_cols) continue;
                  const std::size_t in =
                      (static_cast<std::size_t>(ic) * l.in_rows + ii) * l.in_cols +
                      jj;
                  const double w = l.weights[l.w_index(oc, ic, kh, kw)];
                  out_low[in] += cl * w;
                  out_up[in] += cu * w;
                }
              }
          }
    }
  }
  s.a_low = std::move(a_low);
  s.a_up = std::move(a_up);
  s.width = in_width;
}

// ReLU relaxation lines from the pre-activation interval [l, u]: the
// stable cases are exact; unstable uses the chord from (l,0) to (u,u) as
// the upper line and slope 0/1 (whichever minimizes the gap area) with
// zero intercept as the lower line.
void relu_lines(double l, double u, double& low_slope, double& up_slope,
                double& up_intercept) {
  if (l >= 0.0) {
    low_slope = up_slope = 1.0;
    up_intercept = 0.0;
  } else if (u <= 0.0) {
    low_slope = up_slope = 0.0;
    up_intercept = 0.0;
  } else {
    up_slope = u / (u - l);
    up_intercept = -l * u / (u - l);
    low_slope = u >= -l ? 1.0 : 0.0;
  }
}

void substitute_relu(const IntervalVec& pre, BackwardState& s) {
  std::vector<double> low_slope(s.width), up_slope(s.width), up_icpt(s.width);
  for (std::size_t j = 0; j < s.width; ++j)
    relu_lines(pre.lo[j], pre.hi[j], low_slope[j], up_slope[j], up_icpt[j]);
  for (std::size_t r = 0; r < s.rows; ++r) {
    double* row_low = s.a_low.data() + r * s.width;
    double* row_up = s.a_up.data() + r * s.width;
    for (std::size_t j = 0; j < s.width; ++j) {
      const double cl = row_low[j], cu = row_up[j];
      if (cu >= 0.0) {
        row_up[j] = cu * up_slope[j];
        s.b_up[r] += cu * up_icpt[j];
      } else {
        row_up[j] = cu * low_slope[j];
      }
      if (cl >= 0.0) {
        row_low[j] = cl * low_slope[j];
      } else {
        row_low[j] = cl * up_slope[j];
        s.b_low[r] += cl * up_icpt[j];
      }
    }
  }
}

// Substitute the geometric input layer: pick each pixel's lower or upper
// affine-in-k bound by coefficient sign, yielding forms over k.
ParamLinearForm substitute_input(const LinearRelaxation& relax,
                                 const BackwardState& s) {
  const int dims = relax.dims();
  const std::size_t npix = relax.pixel_count();
  ParamLinearForm form;
  form.dims = dims;
  form.outputs = s.rows;
  form.a_low.assign(s.rows * dims, 0.0);
  form.a_up.assign(s.rows * dims, 0.0);
  form.b_low = s.b_low;
  form.b_up = s.b_up;
  const AffineBoundPair& px = relax.bounds;
  for (std::size_t r = 0; r < s.rows; ++r) {
    const double* row_low = s.a_low.data() + r * s.width;
    const double* row_up = s.a_up.data() + r * s.width;
    for (std::size_t pix = 0; pix < npix; ++pix) {
      const double cl = row_low[pix];
      if (cl >= 0.0) {
        form.b_low[r] += cl * (px.b_low[pix] + relax.delta_low[pix]);
        for (int d = 0; d < dims; ++d)
          form.a_low[r * dims + d] += cl * px.a_low[d * npix + pix];
      } else {
        form.b_low[r] += cl * (px.b_up[pix] + relax.delta_up[pix]);
        for (int d = 0; d < dims; ++d)
          form.a_low[r * dims + d] += cl * px.a_up[d * npix + pix];
      }
      const double cu = row_up[pix];
      if (cu >= 0.0) {
        form.b_up[r] += cu * (px.b_up[pix] + relax.delta_up[pix]);
        for (int d = 0; d < dims; ++d)
          form.a_up[r * dims + d] += cu * px.a_up[d * npix + pix];
      } else {
        form.b_up[r] += cu * (px.b_low[pix] + relax.delta_low[pix]);
        for (int d = 0; d < dims; ++d)
          form.a_up[r * dims + d] += cu * px.a_low[d * npix + pix];
      }
    }
  }
  return form;
}

// Backward pass from boundary `stop` with functional rows C over that
// boundary's activations; returns the symbolic forms over k.
ParamLinearForm run_backward(const Network& net, const LinearRelaxation& relax,
                             const std::vector<IntervalVec>& boundaries,
                             std::size_t stop, std::vector<double> c_rows,
                             std::size_t rows) {
  BackwardState s;
  s.rows = rows;
  s.width = net.layer_width(stop);
  s.a_low = c_rows;
  s.a_up = std::move(c_rows);
  s.b_low.assign(rows, 0.0);
  s.b_up.assign(rows, 0.0);
  for (std::size_t i = stop; i-- > 0;) {
    const Layer& layer = net.layers()[i];
    switch (layer.kind) {
      case LayerKind::Dense:
      case LayerKind::Conv2D:
        substitute_affine(layer, s);
        break;
      case LayerKind::ReLU:
        substitute_relu(boundaries[i], s);
        break;
      case LayerKind::Flatten:
        break;
    }
  }
  return substitute_input(relax, s);
}

std::vector<double> identity_rows(std::size_t n) {
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) c[i * n + i] = 1.0;
  return c;
}

// Pre-activation boundary intervals: an IBP pass, optionally refined by
// per-ReLU backward passes (full CROWN), always intersected with IBP.
std::vector<IntervalVec> boundary_bounds(const Network& net,
                                         const LinearRelaxation& relax,
                                         bool full_crown) {
  std::vector<IntervalVec> at = ibp_boundaries(net, relax);
  if (!full_crown) return at;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    if (net.layers()[i].kind != LayerKind::ReLU) continue;
    const std::size_t w = net.layer_width(i);
    const ParamLinearForm form =
        run_backward(net, relax, at, i, identity_rows(w), w);
    for (std::size_t j = 0; j < w; ++j) {
      const Interval hull = form.concretize(relax.box, j);
      at[i].lo[j] = std::max(at[i].lo[j], hull.lo);
      at[i].hi[j] = std::min(at[i].hi[j], hull.hi);
    }
  }
  return at;
}

}  // namespace

BoundResult ibp_forward(const Network& net, const LinearRelaxation& relax) {
  const std::vector<IntervalVec> at = ibp_boundaries(net, relax);
  BoundResult out;
  out.lower = at.back().lo;
  out.upper = at.back().hi;
  return out;
}

BoundResult crown_backward(const Network& net, const LinearRelaxation& relax,
                           bool full_crown) {
  const std::vector<IntervalVec> at = boundary_bounds(net, relax, full_crown);
  const std::size_t k = net.outputs();
  ParamLinearForm form = run_backward(net, relax, at, net.layers().size(),
                                      identity_rows(k), k);
  BoundResult out;
  out.lower.resize(k);
  out.upper.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Interval hull = form.concretize(relax.box, i);
    // Intersect with the interval pre-pass so the backward method is never
    // looser than ibp_forward.
    out.lower[i] = std::max(hull.lo, at.back().lo[i]);
    out.upper[i] = std::min(hull.hi, at.back().hi[i]);
  }
  out.forms = std::move(form);
  out.has_forms = true;
  return out;
}

std::vector<double> class_difference_lower(const Network& net,
                                           const LinearRelaxation& relax,
                                           int label, VerifyMethod method) {
  const int k = net.outputs();
  if (k < 2) throw InvalidInput("class differences need at least 2 outputs");
  if (label < 0 || label >= k) throw InvalidInput("label out of range");

  if (method == VerifyMethod::Ibp) {
    const BoundResult ibp = ibp_forward(net, relax);
    std::vector<double> lower;
    for (int i = 0; i < k; ++i)
      if (i != label) lower.push_back(ibp.lower[label] - ibp.upper[i]);
    return lower;
  }

  const std::vector<IntervalVec> at =
      boundary_bounds(net, relax, method == VerifyMethod::Crown);
  const std::size_t rows = static_cast<std::size_t>(k) - 1;
  std::vector<double> c(rows * k, 0.0);
  std::size_t r = 0;
  for (int i = 0; i < k; ++i) {
    if (i == label) continue;
    c[r * k + label] = 1.0;
    c[r * k + i] = -1.0;
    ++r;
  }
  const ParamLinearForm form =
      run_backward(net, relax, at, net.layers().size(), std::move(c), rows);
  std::vector<double> lower(rows);
  r = 0;
  for (int i = 0; i < k; ++i) {
    if (i == label) continue;
    // Interval fallback keeps the one-pass bound at least as good as IBP.
    const double ibp_lower = at.back().lo[label] - at.back().hi[i];
    lower[r] = std::max(form.concretize(relax.box, r).lo, ibp_lower);
    ++r;
  }
  return lower;
}

double robustness_margin(const BoundResult& bounds, int label) {
  const int k = static_cast<int>(bounds.lower.size());
  if (k < 2) throw InvalidInput("robustness margin needs at least 2 classes");
  if (label < 0 || label >= k) throw InvalidInput("label out of range");
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i)
    if (i != label) margin = std::min(margin, bounds.lower[label] - bounds.upper[i]);
  return margin;
}

}  // namespace geocert
