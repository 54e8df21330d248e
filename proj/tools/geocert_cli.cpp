// Command-line front end. Everything flows through the C API in geocert.h;
// this file only parses flags, assembles configuration JSON, and moves text
// between files and the library.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "geocert.h"

namespace {

struct ImageDeleter {
  void operator()(geocert_image* p) const { geocert_image_free(p); }
};
struct NetworkDeleter {
  void operator()(geocert_network* p) const { geocert_network_free(p); }
};
struct RelaxationDeleter {
  void operator()(geocert_relaxation* p) const { geocert_relaxation_free(p); }
};
struct StringDeleter {
  void operator()(char* p) const { geocert_string_free(p); }
};
using ImagePtr = std::unique_ptr<geocert_image, ImageDeleter>;
using NetworkPtr = std::unique_ptr<geocert_network, NetworkDeleter>;
using RelaxationPtr = std::unique_ptr<geocert_relaxation, RelaxationDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

// Shared certification options; ranges are in user units (degrees for
// rotation unless --radians, pixels for translation, percent points for
// scaling/shearing).
struct ConfigFlags {
  std::string transform = "rotation";
  std::vector<double> range_lo, range_hi;
  std::vector<double> interval_size;
  bool radians = false;
  int samples = 10;
  int subdivisions = 0;
  double epsilon = 0.0;
  std::string method = "crown-ibp";
  bool whole_box_lipschitz = false;
  double tolerance = 1e-9;
  int threads = 0;
  bool no_early_exit = false;
  bool timing = false;
};

void add_range_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--transform", f.transform,
                  "rotation | translation | scaling | shearing")
      ->capture_default_str();
  cmd->add_option("--range-lo", f.range_lo,
                  "range lower bound(s), one value per transform dimension")
      ->required()
      ->expected(-1);
  cmd->add_option("--range-hi", f.range_hi,
                  "range upper bound(s), one value per transform dimension")
      ->required()
      ->expected(-1);
  cmd->add_flag("--radians", f.radians,
                "rotation range is given in radians instead of degrees");
  cmd->add_option("--samples", f.samples,
                  "parameter samples P for the initial affine bounds")
      ->capture_default_str();
  cmd->add_option("--subdivisions", f.subdivisions,
                  "correction mesh size N (set exactly one of "
                  "--subdivisions / --epsilon)");
  cmd->add_option("--epsilon", f.epsilon,
                  "target correction slack; derives N per interval");
  cmd->add_flag("--whole-box-lipschitz", f.whole_box_lipschitz,
                "use one gradient bound per interval instead of per cell");
}

std::string config_json(const ConfigFlags& f, bool synthesize_interval) {
  nlohmann::json doc;
  doc["transform"] = f.transform;
  doc["range"] = {{"lo", f.range_lo}, {"hi", f.range_hi}};
  if (synthesize_interval) {
    // Whole-range commands have no splitting: one cell covering the range.
    std::vector<double> size;
    for (std::size_t k = 0; k < f.range_lo.size() && k < f.range_hi.size(); ++k) {
      const double w = f.range_hi[k] - f.range_lo[k];
      size.push_back(w > 0 ? w : 1.0);
    }
    doc["interval_size"] = size;
  } else {
    doc["interval_size"] = f.interval_size;
  }
  doc["radians"] = f.radians;
  doc["samples"] = f.samples;
  doc["subdivisions"] = f.subdivisions;
  doc["epsilon"] = f.epsilon;
  doc["method"] = f.method;
  doc["per_cell_lipschitz"] = !f.whole_box_lipschitz;
  doc["tolerance"] = f.tolerance;
  doc["threads"] = f.threads;
  doc["early_exit"] = !f.no_early_exit;
  doc["include_timing"] = f.timing;
  return doc.dump();
}

int fail_from_library() {
  std::fprintf(stderr, "error: %s\n", geocert_last_error());
  return 1;
}

int write_text(const std::string& path, const char* text) {
  std::ofstream out(path);
  out << text;
  if (!out) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    return 1;
  }
  return 0;
}

int run_bounds(const ConfigFlags& f, const std::string& image_path,
               const std::string& out_path) {
  geocert_image* img = nullptr;
  if (geocert_image_load(image_path.c_str(), &img)) return fail_from_library();
  ImagePtr img_guard(img);

  geocert_relaxation* relax = nullptr;
  if (geocert_relaxation_build(img, config_json(f, true).c_str(), &relax))
    return fail_from_library();
  RelaxationPtr relax_guard(relax);

  if (geocert_relaxation_save(relax, out_path.c_str())) return fail_from_library();
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int run_check(const std::string& relax_path, const std::string& image_path,
              std::int64_t samples, double tolerance) {
  geocert_relaxation* relax = nullptr;
  if (geocert_relaxation_load(relax_path.c_str(), &relax))
    return fail_from_library();
  RelaxationPtr relax_guard(relax);

  geocert_image* img = nullptr;
  if (geocert_image_load(image_path.c_str(), &img)) return fail_from_library();
  ImagePtr img_guard(img);

  std::int64_t violations = 0;
  double worst = 0.0;
  if (geocert_relaxation_check(relax, img, samples, tolerance, &violations,
                               &worst))
    return fail_from_library();
  std::printf("samples=%lld violations=%lld worst=%.17g\n",
              static_cast<long long>(samples),
              static_cast<long long>(violations), worst);
  return violations > 0 ? 3 : 0;
}

int run_certify(const ConfigFlags& f, const std::string& network_path,
                const std::string& dataset_path, const std::string& out_path,
                bool quiet) {
  geocert_network* net = nullptr;
  if (geocert_network_load(network_path.c_str(), &net)) return fail_from_library();
  NetworkPtr net_guard(net);

  char* report = nullptr;
  char* summary = nullptr;
  if (geocert_certify_dataset(net, dataset_path.c_str(),
                              config_json(f, false).c_str(), &report, &summary))
    return fail_from_library();
  StringPtr report_guard(report), summary_guard(summary);

  if (!quiet) std::fputs(summary, stdout);
  if (!out_path.empty()) {
    if (const int rc = write_text(out_path, report)) return rc;
    std::printf("wrote %s\n", out_path.c_str());
  } else if (quiet) {
    std::fputs(report, stdout);
  }
  return 0;
}

int run_curve(const ConfigFlags& f, const std::string& image_path, int channel,
              int row, int col, int resolution, const std::string& out_path) {
  geocert_image* img = nullptr;
  if (geocert_image_load(image_path.c_str(), &img)) return fail_from_library();
  ImagePtr img_guard(img);

  char* csv = nullptr;
  if (geocert_curve(img, channel, row, col, config_json(f, true).c_str(),
                    resolution, &csv))
    return fail_from_library();
  StringPtr csv_guard(csv);

  if (out_path.empty()) {
    std::fputs(csv, stdout);
    return 0;
  }
  if (const int rc = write_text(out_path, csv)) return rc;
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Sound linear relaxations of geometric image transforms and "
      "robustness certification of small feedforward classifiers"};
  app.require_subcommand(1);

  ConfigFlags bounds_flags;
  std::string bounds_image, bounds_out = "relaxation.json";
  CLI::App* bounds = app.add_subcommand(
      "bounds", "build a sound per-pixel relaxation over a parameter range");
  bounds->add_option("--image", bounds_image,
                     "input image (.pgm, .csv, or channel-manifest .json)")
      ->required();
  add_range_flags(bounds, bounds_flags);
  bounds->add_option("--out", bounds_out, "relaxation output path")
      ->capture_default_str();

  std::string check_relax, check_image;
  std::int64_t check_samples = 100000;
  double check_tolerance = 1e-9;
  CLI::App* check = app.add_subcommand(
      "check", "empirically validate a saved relaxation against its image");
  check->add_option("--relaxation", check_relax, "saved relaxation path")
      ->required();
  check->add_option("--image", check_image, "the original input image")
      ->required();
  check->add_option("--samples", check_samples, "parameter samples to test")
      ->capture_default_str();
  check->add_option("--tolerance", check_tolerance, "violation tolerance")
      ->capture_default_str();

  ConfigFlags certify_flags;
  std::string certify_network, certify_dataset, certify_out;
  bool certify_quiet = false;
  CLI::App* certify = app.add_subcommand(
      "certify", "certify a labeled dataset over a split parameter range");
  certify->add_option("--network", certify_network, "network manifest path")
      ->required();
  certify->add_option("--dataset", certify_dataset, "dataset manifest path")
      ->required();
  add_range_flags(certify, certify_flags);
  certify
      ->add_option("--interval-size", certify_flags.interval_size,
                   "sub-interval size per dimension (user units)")
      ->required()
      ->expected(-1);
  certify
      ->add_option("--method", certify_flags.method,
                   "verifier: ibp | crown | crown-ibp")
      ->capture_default_str();
  certify
      ->add_option("--tolerance", certify_flags.tolerance,
                   "soundness tolerance echoed into the report")
      ->capture_default_str();
  certify->add_option("--threads", certify_flags.threads,
                      "worker threads (0 = GEOCERT_THREADS or hardware)");
  certify->add_flag("--no-early-exit", certify_flags.no_early_exit,
                    "evaluate every sub-interval even after a failure");
  certify->add_flag("--timing", certify_flags.timing,
                    "include wall-clock timings in the report");
  certify->add_option("--out", certify_out, "write the JSON report here");
  certify->add_flag("--quiet", certify_quiet,
                    "suppress the text summary (prints the JSON report "
                    "when no --out is given)");

  ConfigFlags curve_flags;
  std::string curve_image, curve_out;
  int curve_channel = 0, curve_row = 1, curve_col = 1, curve_resolution = 201;
  CLI::App* curve = app.add_subcommand(
      "curve", "emit per-pixel bound/correction curve data as CSV");
  curve->add_option("--image", curve_image, "input image")->required();
  add_range_flags(curve, curve_flags);
  curve->add_option("--channel", curve_channel, "pixel channel (0-based)")
      ->capture_default_str();
  curve->add_option("--row", curve_row, "pixel row (1-based)")->required();
  curve->add_option("--col", curve_col, "pixel column (1-based)")->required();
  curve->add_option("--resolution", curve_resolution,
                    "number of sampled parameter values")
      ->capture_default_str();
  curve->add_option("--out", curve_out, "CSV output path (stdout if absent)");

  CLI11_PARSE(app, argc, argv);

  if (bounds->parsed()) return run_bounds(bounds_flags, bounds_image, bounds_out);
  if (check->parsed())
    return run_check(check_relax, check_image, check_samples, check_tolerance);
  if (certify->parsed())
    return run_certify(certify_flags, certify_network, certify_dataset,
                       certify_out, certify_quiet);
  if (curve->parsed())
    return run_curve(curve_flags, curve_image, curve_channel, curve_row,
                     curve_col, curve_resolution, curve_out);
  return 1;
}
