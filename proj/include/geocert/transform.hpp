#pragma once

#include <string>
#include <vector>

#include "geocert/image.hpp"
#include "geocert/interval.hpp"

namespace geocert {

enum class TransformKind { Rotation, Translation, Scaling, Shearing };

const char* transform_kind_name(TransformKind kind);
TransformKind transform_kind_from_name(const std::string& name);

// Parameter dimension of the transform (2 for translation, 1 otherwise).
int transform_dims(TransformKind kind);

// A geometric transform together with the image size it acts on. All kinds
// are applied about the image center (n/2, m/2); translation is unaffected
// by the centering.
//
// Parameter units: rotation angle in radians; translation offsets in
// pixels; the scaling parameter s yields factor lambda = 1 + s/100 and the
// shearing parameter s yields shear coefficient s/100 (so ranges such as
// [-2,2] stay clear of the lambda = 0 singularity). Degree conversion for
// rotation happens at the CLI/config boundary, never here.
struct TransformSpec {
  TransformKind kind = TransformKind::Rotation;
  int rows = 0;  // n
  int cols = 0;  // m

  TransformSpec() = default;
  TransformSpec(TransformKind k, int n, int m) : kind(k), rows(n), cols(m) {
    if (n < 1 || m < 1) throw InvalidInput("transform image size must be positive");
  }

  int dims() const { return transform_dims(kind); }
  double center_x() const { return rows / 2.0; }
  double center_y() const { return cols / 2.0; }

  // Identity parameter vector (all zeros for every kind).
  ParamVector identity() const { return ParamVector(dims(), 0.0); }
};

// Axis-aligned box of transform parameters, componentwise lo <= hi.
struct ParamBox {
  std::vector<double> lo;
  std::vector<double> hi;

  ParamBox() = default;
  ParamBox(std::vector<double> lo_, std::vector<double> hi_)
      : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size() || lo.empty())
      throw InvalidInput("parameter box bounds must have equal nonzero length");
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (!(lo[k] <= hi[k])) throw InvalidInput("parameter box bounds out of order");
  }
  static ParamBox range(double lo, double hi) { return ParamBox({lo}, {hi}); }

  int dims() const { return static_cast<int>(lo.size()); }
  double width(int d) const { return hi[d] - lo[d]; }
  double mid(int d) const { return 0.5 * (lo[d] + hi[d]); }
  Interval interval(int d) const { return {lo[d], hi[d]}; }
  ParamVector midpoint() const {
    ParamVector m(lo.size());
    for (std::size_t k = 0; k < lo.size(); ++k) m[k] = 0.5 * (lo[k] + hi[k]);
    return m;
  }
  bool contains(const ParamVector& p, double slack = 0.0) const {
    if (p.size() != lo.size()) return false;
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (p[k] < lo[k] - slack || p[k] > hi[k] + slack) return false;
    return true;
  }
  bool is_point() const {
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (lo[k] != hi[k]) return false;
    return true;
  }
};

// Source coordinate of output pixel (i,j) under the inverse transform.
Coord inverse_map(const TransformSpec& spec, const ParamVector& params,
                  double i, double j);

// Interval enclosure of inverse_map over a parameter box (x range, y range).
// Sound: contains inverse_map(spec, p, i, j) for every p in the box.
std::pair<Interval, Interval> inverse_map_enclosure(const TransformSpec& spec,
                                                    const ParamBox& box,
                                                    double i, double j);

// Enclosures of d(x)/d(param_dim) and d(y)/d(param_dim) over the box.
std::pair<Interval, Interval> inverse_map_derivative_enclosure(
    const TransformSpec& spec, const ParamBox& box, double i, double j, int dim);

// Validate that params / box lie in the kind's validity domain
// (throws SingularTransform for scaling at or across factor zero).
void check_params(const TransformSpec& spec, const ParamVector& params);
void check_box(const TransformSpec& spec, const ParamBox& box);

}  // namespace geocert
