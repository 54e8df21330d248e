#include "geocert/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "geocert/errors.hpp"
#include "geocert/lipschitz.hpp"
#include "geocert/parallel.hpp"

namespace geocert {
namespace {

using nlohmann::json;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<double> broadcast(const std::vector<double>& v, int d, const char* what) {
  if (static_cast<int>(v.size()) == d) return v;
  if (v.size() == 1) return std::vector<double>(static_cast<std::size_t>(d), v[0]);
  throw InvalidInput(std::string(what) +
                     " needs one entry or one per transform dimension");
}

std::vector<double> slope_slice(const AffineBoundPair& bounds, BoundSide side,
                                int dim) {
  const std::vector<double>& a =
      side == BoundSide::Lower ? bounds.a_low : bounds.a_up;
  return {a.begin() + dim * bounds.pixels, a.begin() + (dim + 1) * bounds.pixels};
}

RelaxationOptions relaxation_options(const CertificationConfig& config) {
  RelaxationOptions opt;
  opt.samples = config.samples;
  opt.subdivisions = config.subdivisions;
  opt.epsilon = config.epsilon;
  opt.per_cell_lipschitz = config.per_cell_lipschitz;
  return opt;
}

std::vector<double> number_or_array(const json& v, const char* what) {
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array() && !v.empty()) {
    try {
      return v.get<std::vector<double>>();
    } catch (const json::exception&) {
    }
  }
  throw InvalidInput(std::string(what) + " must be a number or a number array");
}

json config_to_json(const CertificationConfig& c) {
  return json{{"transform", transform_kind_name(c.kind)},
              {"range", {{"lo", c.range_lo}, {"hi", c.range_hi}}},
              {"radians", c.radians},
              {"interval_size", c.interval_size},
              {"samples", c.samples},
              {"subdivisions", c.subdivisions},
              {"epsilon", c.epsilon},
              {"method", verify_method_name(c.method)},
              {"per_cell_lipschitz", c.per_cell_lipschitz},
              {"tolerance", c.tolerance},
              {"threads", c.threads},
              {"early_exit", c.early_exit},
              {"include_timing", c.include_timing}};
}

// Minimum evaluated sub-interval margin; falls back to the clean margin when
// nothing was evaluated (misclassified or zero sub-intervals).
double summary_margin(const ImageRecord& r) {
  double m = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const SubIntervalRecord& s : r.intervals)
    if (s.evaluated) {
      m = std::min(m, s.margin);
      any = true;
    }
  return any ? m : r.clean_margin;
}

}  // namespace

ParamBox CertificationConfig::user_box() const {
  return ParamBox(broadcast(range_lo, dims(), "range lo"),
                  broadcast(range_hi, dims(), "range hi"));
}

std::vector<double> CertificationConfig::sizes() const {
  const std::vector<double> s = broadcast(interval_size, dims(), "interval size");
  for (double v : s)
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidInput("interval size must be positive");
  return s;
}

void CertificationConfig::validate() const {
  user_box();
  sizes();
  if (samples < 2) throw InvalidInput("sample count P must be at least 2");
  if (subdivisions < 0)
    throw InvalidInput("subdivision count must be nonnegative");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw InvalidInput("epsilon must be a nonnegative real");
  if ((subdivisions > 0) == (epsilon > 0.0))
    throw InvalidInput("exactly one of subdivisions and epsilon must be set");
  if (!(tolerance >= 0.0)) throw InvalidInput("tolerance must be nonnegative");
  if (threads < 0) throw InvalidInput("thread count must be nonnegative");
}

namespace {

CertificationConfig config_from_doc(const json& doc, const std::string& context) {
  CertificationConfig c;
  try {
    c.kind = transform_kind_from_name(doc.at("transform").get<std::string>());
    const json& range = doc.at("range");
    c.range_lo = number_or_array(range.at("lo"), "range lo");
    c.range_hi = number_or_array(range.at("hi"), "range hi");
    c.interval_size = number_or_array(doc.at("interval_size"), "interval size");
    c.radians = doc.value("radians", false);
    c.samples = doc.value("samples", 10);
    c.subdivisions = doc.value("subdivisions", 0);
    c.epsilon = doc.value("epsilon", 0.0);
    if (doc.contains("method"))
      c.method = verify_method_from_name(doc.at("method").get<std::string>());
    c.per_cell_lipschitz = doc.value("per_cell_lipschitz", true);
    c.tolerance = doc.value("tolerance", 1e-9);
    c.threads = doc.value("threads", 0);
    c.early_exit = doc.value("early_exit", true);
    c.include_timing = doc.value("include_timing", false);
  } catch (const json::exception& e) {
    throw InvalidInput(context + ": " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

CertificationConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError(path + ": invalid JSON: " + e.what());
  }
  return config_from_doc(doc, path);
}

CertificationConfig config_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config JSON: ") + e.what());
  }
  return config_from_doc(doc, "config");
}

std::vector<ParamBox> split_range(const ParamBox& box,
                                  const std::vector<double>& sizes) {
  const int d = box.dims();
  if (static_cast<int>(sizes.size()) != d)
    throw InvalidInput("interval size count differs from range dimension");
  for (double s : sizes)
    if (!(s > 0.0) || !std::isfinite(s))
      throw InvalidInput("interval size must be positive");

  // Cells per dimension: ceil(width/size), trimmed if rounding produced an
  // empty trailing cell (the k-th cell starts at lo + k*size).
  std::vector<int> counts(d);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) {
    const double w = box.width(k);
    double n = w > 0.0 ? std::ceil(w / sizes[k]) : 1.0;
    if (!(n >= 1.0) || n > 1e9)
      throw InvalidInput("interval size yields an unreasonable cell count");
    int c = static_cast<int>(n);
    while (c > 1 && box.lo[k] + (c - 1) * sizes[k] >= box.hi[k]) --c;
    counts[k] = c;
    total *= static_cast<std::size_t>(c);
    if (total > 100000000u)
      throw InvalidInput("interval size yields an unreasonable cell count");
  }

  std::vector<ParamBox> cells;
  cells.reserve(total);
  std::vector<double> lo(d), hi(d);
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rem = t;
    for (int k = d - 1; k >= 0; --k) {  // last dimension fastest
      const int c = static_cast<int>(rem % counts[k]);
      rem /= counts[k];
      lo[k] = box.lo[k] + c * sizes[k];
      hi[k] = c + 1 == counts[k] ? box.hi[k]
                                 : std::min(box.hi[k], box.lo[k] + (c + 1) * sizes[k]);
    }
    cells.emplace_back(lo, hi);
  }
  return cells;
}

ParamBox to_transform_units(const CertificationConfig& config, const ParamBox& cell) {
  if (config.kind != TransformKind::Rotation || config.radians) return cell;
  const double f = std::numbers::pi / 180.0;
  std::vector<double> lo = cell.lo, hi = cell.hi;
  for (double& v : lo) v *= f;
  for (double& v : hi) v *= f;
  return ParamBox(std::move(lo), std::move(hi));
}

ImageRecord certify_image(const Network& net, const Image& img, int label,
                          const CertificationConfig& config,
                          const std::string& name) {
  config.validate();
  if (!(img.shape() == net.input_shape()))
    throw InvalidInput("image shape differs from the network input shape");
  if (label < 0 || label >= net.outputs())
    throw InvalidInput("label out of range for the network");
  if (net.outputs() < 2)
    throw InvalidInput("certification needs at least two classes");

  const auto t0 = std::chrono::steady_clock::now();
  ImageRecord rec;
  rec.name = name;
  rec.label = label;

  const std::vector<double> out = net.forward(img);
  int best = 0;
  for (int i = 1; i < net.outputs(); ++i)
    if (out[i] > out[best]) best = i;
  rec.predicted = best;
  rec.clean_correct = best == label;
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < net.outputs(); ++i)
    if (i != label) margin = std::min(margin, out[label] - out[i]);
  rec.clean_margin = margin;
  if (!rec.clean_correct) {  // clean-incorrect: record and skip
    rec.seconds = seconds_since(t0);
    return rec;
  }

  const std::vector<ParamBox> cells = split_range(config.user_box(), config.sizes());
  const TransformSpec spec(config.kind, img.rows(), img.cols());
  const RelaxationOptions opt = relaxation_options(config);
  rec.intervals.reserve(cells.size());
  bool failed = false;
  for (const ParamBox& cell : cells) {
    SubIntervalRecord sub;
    sub.box = to_transform_units(config, cell);
    if (!(failed && config.early_exit)) {
      const LinearRelaxation relax = build_relaxation(img, spec, sub.box, opt);
      const std::vector<double> diffs =
          class_difference_lower(net, relax, label, config.method);
      sub.margin = *std::min_element(diffs.begin(), diffs.end());
      sub.verified = sub.margin > 0.0;
      sub.evaluated = true;
      if (!sub.verified) failed = true;
    }
    rec.intervals.push_back(std::move(sub));
  }
  rec.certified = !failed;
  rec.seconds = seconds_since(t0);
  return rec;
}

CertificationReport certify_dataset(const Network& net,
                                    const std::vector<LabeledImage>& dataset,
                                    const CertificationConfig& config) {
  config.validate();
  if (dataset.empty()) throw InvalidInput("dataset is empty");

  CertificationReport report;
  report.config = config;
  report.images.resize(dataset.size());
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(
      dataset.size(),
      [&](std::size_t t) {
        const LabeledImage& item = dataset[t];
        try {
          report.images[t] =
              certify_image(net, item.image, item.label, config, item.name);
        } catch (const std::exception& e) {
          ImageRecord rec;
          rec.name = item.name;
          rec.label = item.label;
          rec.error = e.what();
          report.images[t] = std::move(rec);
        }
      },
      config.threads);
  report.compute_seconds = seconds_since(t0);

  report.total = static_cast<int>(report.images.size());
  for (const ImageRecord& r : report.images) {
    report.clean_correct += r.clean_correct ? 1 : 0;
    report.certified += r.certified ? 1 : 0;
  }
  report.clean_pct = 100.0 * report.clean_correct / report.total;
  report.certified_pct = 100.0 * report.certified / report.total;
  report.seconds_per_image = report.compute_seconds / report.total;
  return report;
}

std::string report_to_json(const CertificationReport& report) {
  json doc;
  doc["config"] = config_to_json(report.config);
  doc["aggregate"] = {{"total", report.total},
                      {"clean_correct", report.clean_correct},
                      {"certified", report.certified},
                      {"clean_accuracy_pct", report.clean_pct},
                      {"certified_pct", report.certified_pct}};
  if (report.config.include_timing)
    doc["timing"] = {{"load_seconds", report.load_seconds},
                     {"compute_seconds", report.compute_seconds},
                     {"seconds_per_image", report.seconds_per_image}};
  doc["images"] = json::array();
  for (const ImageRecord& r : report.images) {
    json rec{{"name", r.name},
             {"label", r.label},
             {"predicted", r.predicted},
             {"clean_correct", r.clean_correct},
             {"certified", r.certified},
             {"clean_margin", r.clean_margin}};
    if (!r.error.empty()) rec["error"] = r.error;
    if (report.config.include_timing) rec["seconds"] = r.seconds;
    rec["intervals"] = json::array();
    for (const SubIntervalRecord& s : r.intervals)
      rec["intervals"].push_back({{"lo", s.box.lo},
                                  {"hi", s.box.hi},
                                  {"margin", s.margin},
                                  {"verified", s.verified},
                                  {"evaluated", s.evaluated}});
    doc["images"].push_back(std::move(rec));
  }
  return doc.dump(2) + "\n";
}

std::string report_summary(const CertificationReport& report) {
  const CertificationConfig& c = report.config;
  std::ostringstream out;
  out << "certification summary\n";
  out << "  transform        " << transform_kind_name(c.kind) << " range [";
  const ParamBox box = c.user_box();
  for (int k = 0; k < box.dims(); ++k) {
    if (k) out << "] x [";
    out << box.lo[k] << ", " << box.hi[k];
  }
  out << "]" << (c.kind == TransformKind::Rotation && !c.radians ? " deg" : "")
      << ", interval size";
  for (double s : c.sizes()) out << ' ' << s;
  out << "\n";
  out << "  verifier         " << verify_method_name(c.method) << ", P=" << c.samples;
  if (c.subdivisions > 0) out << ", N=" << c.subdivisions;
  else out << ", epsilon=" << c.epsilon;
  out << "\n";
  out << std::fixed << std::setprecision(2);
  out << "  images           " << report.total << "\n";
  out << "  clean correct    " << report.clean_correct << " (" << report.clean_pct
      << "%)\n";
  out << "  certified        " << report.certified << " (" << report.certified_pct
      << "%)\n";
  if (c.include_timing)
    out << "  time             " << std::setprecision(3) << report.load_seconds
        << "s load, " << report.compute_seconds << "s compute, "
        << report.seconds_per_image << "s/image\n";
  out << "\n";

  std::size_t width = 4;
  for (const ImageRecord& r : report.images)
    width = std::max(width, r.name.size());
  out << "  " << std::left << std::setw(static_cast<int>(width)) << "name"
      << std::right << std::setw(7) << "label" << std::setw(6) << "pred"
      << std::setw(7) << "clean" << std::setw(6) << "cert" << std::setw(14)
      << "margin" << "\n";
  out << std::setprecision(6);
  for (const ImageRecord& r : report.images) {
    out << "  " << std::left << std::setw(static_cast<int>(width)) << r.name
        << std::right << std::setw(7) << r.label;
    if (!r.error.empty()) {
      out << "  error: " << r.error << "\n";
      continue;
    }
    out << std::setw(6) << r.predicted << std::setw(7)
        << (r.clean_correct ? "yes" : "no") << std::setw(6)
        << (r.certified ? "yes" : "no") << std::setw(14) << summary_margin(r)
        << "\n";
  }
  return out.str();
}

void save_report(const CertificationReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << report_to_json(report);
  if (!out) throw IoError("write failed: " + path);
}

CurveData emit_curve(const Image& img, int channel, int i, int j,
                     const TransformSpec& spec, const ParamBox& box,
                     const CertificationConfig& config, int resolution) {
  if (box.dims() != 1)
    throw InvalidInput("curve emission needs a one-dimensional parameter range");
  if (channel < 0 || channel >= img.channels() || i < 1 || i > img.rows() ||
      j < 1 || j > img.cols())
    throw InvalidInput("curve pixel out of range");
  if (resolution < 2) throw InvalidInput("curve resolution must be at least 2");

  const LinearRelaxation relax =
      build_relaxation(img, spec, box, relaxation_options(config));

  CurveData data;
  data.pixel = img.shape().index(channel, i, j);
  data.subdivisions = relax.subdivisions;
  data.delta_low = relax.delta_low[data.pixel];
  data.delta_up = relax.delta_up[data.pixel];

  const double lo = box.lo[0];
  const double w = box.width(0);
  const int npts = w > 0.0 ? resolution : 1;
  data.rows.reserve(static_cast<std::size_t>(npts));
  for (int t = 0; t < npts; ++t) {
    CurveRow row;
    row.kappa = npts == 1 ? lo : lo + w * t / (npts - 1);
    const ParamVector k{row.kappa};
    row.value = bilinear_interpolate(img, channel, inverse_map(spec, k, i, j));
    row.lower = relax.lower_at(k, data.pixel);
    row.upper = relax.upper_at(k, data.pixel);
    row.residual_low =
        row.value - relax.bounds.value(BoundSide::Lower, k, data.pixel);
    row.residual_up =
        relax.bounds.value(BoundSide::Upper, k, data.pixel) - row.value;
    data.rows.push_back(row);
  }

  // Cell-midpoint certificates recomputed exactly as the correction mesh
  // does, so min(0, min cert_low) reproduces delta_low bit for bit.
  const int cells = w > 0.0 ? relax.subdivisions : 1;
  std::vector<double> l_low_box, l_up_box;
  if (!config.per_cell_lipschitz && w > 0.0) {
    l_low_box = residual_lipschitz(
        img, spec, slope_slice(relax.bounds, BoundSide::Lower, 0), box, 0);
    l_up_box = residual_lipschitz(
        img, spec, slope_slice(relax.bounds, BoundSide::Upper, 0), box, 0);
  }
  data.markers.reserve(static_cast<std::size_t>(cells));
  std::size_t arg_low = 0, arg_up = 0;
  double best_low = std::numeric_limits<double>::infinity();
  double best_up = std::numeric_limits<double>::infinity();
  for (int c = 0; c < cells; ++c) {
    const ParamBox cell({lo + w * c / cells}, {lo + w * (c + 1) / cells});
    const ParamVector mid = cell.midpoint();
    const Image g = transform_image(img, spec, mid);
    CurveMarker m;
    m.kappa = mid[0];
    m.cert_low = residual(g, mid, relax.bounds, BoundSide::Lower)[data.pixel];
    m.cert_up = residual(g, mid, relax.bounds, BoundSide::Upper)[data.pixel];
    if (cell.width(0) > 0.0) {
      const double halfwidth = 0.5 * cell.width(0);
      const std::vector<double> llow =
          config.per_cell_lipschitz
              ? residual_lipschitz(img, spec,
                                   slope_slice(relax.bounds, BoundSide::Lower, 0),
                                   cell, 0)
              : l_low_box;
      const std::vector<double> lup =
          config.per_cell_lipschitz
              ? residual_lipschitz(img, spec,
                                   slope_slice(relax.bounds, BoundSide::Upper, 0),
                                   cell, 0)
              : l_up_box;
      m.cert_low -= llow[data.pixel] * halfwidth;
      m.cert_up -= lup[data.pixel] * halfwidth;
    }
    if (m.cert_low < best_low) {
      best_low = m.cert_low;
      arg_low = data.markers.size();
    }
    if (m.cert_up < best_up) {
      best_up = m.cert_up;
      arg_up = data.markers.size();
    }
    data.markers.push_back(m);
  }
  data.markers[arg_low].min_low = true;
  data.markers[arg_up].min_up = true;
  return data;
}

std::string curve_to_csv(const CurveData& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "# pixel=" << curve.pixel << " subdivisions=" << curve.subdivisions
      << " delta_low=" << curve.delta_low << " delta_up=" << curve.delta_up
      << "\n";
  out << "type,kappa,value,lower,upper,residual_low,residual_up,"
         "cert_low,cert_up,min_low,min_up\n";
  for (const CurveRow& r : curve.rows)
    out << "sample," << r.kappa << ',' << r.value << ',' << r.lower << ','
        << r.upper << ',' << r.residual_low << ',' << r.residual_up
        << ",,,,\n";
  for (const CurveMarker& m : curve.markers)
    out << "midpoint," << m.kappa << ",,,,,," << m.cert_low << ',' << m.cert_up
        << ',' << (m.min_low ? 1 : 0) << ',' << (m.min_up ? 1 : 0) << "\n";
  return out.str();
}

}  // namespace geocert
