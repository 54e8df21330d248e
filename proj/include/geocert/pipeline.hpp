#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "geocert/image_io.hpp"
#include "geocert/network.hpp"
#include "geocert/propagate.hpp"
#include "geocert/relaxation.hpp"
#include "geocert/transform.hpp"

namespace geocert {

// User-facing certification configuration. Ranges and interval sizes are in
// user units -- degrees for rotation (unless `radians`), pixels for
// translation, percent points for scaling/shearing -- and unit conversion
// happens only after range splitting, so cell boundaries land exactly on the
// published grid (e.g. [-10,-8],...,[8,10] degrees).
struct CertificationConfig {
  TransformKind kind = TransformKind::Rotation;
  std::vector<double> range_lo, range_hi;  // user units; length dims() or 1
  std::vector<double> interval_size;       // user units; length dims() or 1
  bool radians = false;                    // rotation range already in radians
  int samples = 10;                        // P for Step 1-bis
  int subdivisions = 0;                    // N; exactly one of N / epsilon set
  double epsilon = 0.0;                    // target correction slack
  VerifyMethod method = VerifyMethod::CrownIbp;
  bool per_cell_lipschitz = true;
  double tolerance = 1e-9;
  int threads = 0;       // 0 = GEOCERT_THREADS env / hardware concurrency
  bool early_exit = true;
  bool include_timing = false;  // off keeps reports byte-identical

  int dims() const { return transform_dims(kind); }
  ParamBox user_box() const;          // broadcast + validated, user units
  std::vector<double> sizes() const;  // per-dimension interval sizes
  void validate() const;
};

// Config file: JSON mirroring the struct fields; "range" is {"lo":...,"hi":...}
// with scalars or per-dimension arrays, likewise "interval_size".
CertificationConfig config_from_json_file(const std::string& path);
// Same schema from an in-memory JSON string (the C API entry point).
CertificationConfig config_from_json_text(const std::string& text);

// Contiguous cells covering the box exactly: per dimension the boundaries
// are lo + k*size (computed multiplicatively, last cell truncated at hi),
// Cartesian product across dimensions with the last dimension fastest.
// Zero-width dimensions keep a single degenerate cell.
std::vector<ParamBox> split_range(const ParamBox& box,
                                  const std::vector<double>& sizes);

// Degree-to-radian conversion of a rotation cell; identity for the other
// kinds or when the config already speaks radians.
ParamBox to_transform_units(const CertificationConfig& config, const ParamBox& cell);

struct SubIntervalRecord {
  ParamBox box;            // transform units
  double margin = 0.0;     // min class-difference lower bound over the cell
  bool verified = false;   // margin > 0
  bool evaluated = false;  // false when early exit skipped the cell
};

struct ImageRecord {
  std::string name;
  int label = 0;
  int predicted = -1;
  bool clean_correct = false;
  bool certified = false;      // clean-correct and every cell verified
  double clean_margin = 0.0;   // min_i != label (out[label] - out[i])
  std::vector<SubIntervalRecord> intervals;
  std::string error;    // per-image compute failure; empty on a clean run
  double seconds = 0.0; // compute wall time for this image
};

// Certify one labeled image: clean forward pass first (misclassified images
// are recorded and skipped), then one relaxation + verifier margin per
// sub-interval of the configured range.
ImageRecord certify_image(const Network& net, const Image& img, int label,
                          const CertificationConfig& config,
                          const std::string& name = "");

struct CertificationReport {
  CertificationConfig config;
  std::vector<ImageRecord> images;
  int total = 0;
  int clean_correct = 0;
  int certified = 0;
  double clean_pct = 0.0;
  double certified_pct = 0.0;    // always <= clean_pct
  double load_seconds = 0.0;     // filled by whoever did the file I/O
  double compute_seconds = 0.0;
  double seconds_per_image = 0.0;
};

// Run certify_image over the dataset (images in parallel, report assembly
// single-writer), aggregate counts and timings. Per-image errors are
// recorded in the image records, never fatal to the run.
CertificationReport certify_dataset(const Network& net,
                                    const std::vector<LabeledImage>& dataset,
                                    const CertificationConfig& config);

// Machine-readable report and aligned-text summary. Timing appears only
// when config.include_timing is set, keeping the output deterministic.
std::string report_to_json(const CertificationReport& report);
std::string report_summary(const CertificationReport& report);
void save_report(const CertificationReport& report, const std::string& path);

// Curve data for one pixel over a one-dimensional parameter range: the
// exact pixel curve, both corrected bound lines, the pre-correction
// residuals, plus the N cell-midpoint certificates with the minimum per
// side flagged -- enough to re-plot the bound/correction figures externally.
struct CurveRow {
  double kappa = 0.0;
  double value = 0.0;                         // exact g_x(kappa) at the pixel
  double lower = 0.0, upper = 0.0;            // corrected bound lines
  double residual_low = 0.0, residual_up = 0.0;
};
struct CurveMarker {
  double kappa = 0.0;                         // cell midpoint
  double cert_low = 0.0, cert_up = 0.0;       // per-cell certificates
  bool min_low = false, min_up = false;
};
struct CurveData {
  std::size_t pixel = 0;
  int subdivisions = 0;
  double delta_low = 0.0, delta_up = 0.0;
  std::vector<CurveRow> rows;
  std::vector<CurveMarker> markers;
};
CurveData emit_curve(const Image& img, int channel, int i, int j,
                     const TransformSpec& spec, const ParamBox& box,
                     const CertificationConfig& config, int resolution = 201);
std::string curve_to_csv(const CurveData& curve);

}  // namespace geocert
