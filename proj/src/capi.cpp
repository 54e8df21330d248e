#include "geocert.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "geocert/errors.hpp"
#include "geocert/image_io.hpp"
#include "geocert/network.hpp"
#include "geocert/pipeline.hpp"
#include "geocert/relaxation.hpp"

struct geocert_image {
  geocert::Image value;
};
struct geocert_network {
  geocert::Network value;
};
struct geocert_relaxation {
  geocert::LinearRelaxation value;
};

namespace {

thread_local std::string g_last_error;

geocert_status fail(geocert_status status, const char* what) {
  g_last_error = what;
  return status;
}

// Run a callable at the C boundary, translating exceptions 1:1 onto status
// codes. A successful call clears the thread's error message.
template <typename F>
geocert_status guarded(F&& f) {
  try {
    f();
  } catch (const geocert::InvalidInput& e) {
    return fail(GEOCERT_INVALID_ARGUMENT, e.what());
  } catch (const geocert::IoError& e) {
    return fail(GEOCERT_IO_ERROR, e.what());
  } catch (const geocert::SingularTransform& e) {
    return fail(GEOCERT_SINGULAR_TRANSFORM, e.what());
  } catch (const geocert::ResourceLimit& e) {
    return fail(GEOCERT_RESOURCE_LIMIT, e.what());
  } catch (const std::exception& e) {
    return fail(GEOCERT_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(GEOCERT_INTERNAL_ERROR, "unknown error");
  }
  g_last_error.clear();
  return GEOCERT_OK;
}

void require(const void* ptr, const char* what) {
  if (!ptr) throw geocert::InvalidInput(std::string(what) + " must not be null");
}

char* copy_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

// Full-range parameter box and relaxation options from a parsed config.
geocert::ParamBox config_box(const geocert::CertificationConfig& config) {
  return geocert::to_transform_units(config, config.user_box());
}

geocert::RelaxationOptions config_options(const geocert::CertificationConfig& config) {
  geocert::RelaxationOptions opt;
  opt.samples = config.samples;
  opt.subdivisions = config.subdivisions;
  opt.epsilon = config.epsilon;
  opt.per_cell_lipschitz = config.per_cell_lipschitz;
  return opt;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

extern "C" {

const char* geocert_version(void) { return "0.1.0"; }

const char* geocert_last_error(void) { return g_last_error.c_str(); }

void geocert_string_free(char* text) { std::free(text); }

geocert_status geocert_image_load(const char* path, geocert_image** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new geocert_image{geocert::load_image(path)};
  });
}

geocert_status geocert_image_create(int channels, int rows, int cols,
                                    const double* data, geocert_image** out) {
  return guarded([&] {
    require(data, "data");
    require(out, "out");
    const geocert::Shape shape{channels, rows, cols};
    if (channels < 1 || rows < 1 || cols < 1)
      throw geocert::InvalidInput("image dimensions must be positive");
    *out = new geocert_image{geocert::Image(
        shape, std::vector<double>(data, data + shape.size()))};
  });
}

geocert_status geocert_image_save(const geocert_image* img, const char* path) {
  return guarded([&] {
    require(img, "image");
    require(path, "path");
    geocert::save_image(img->value, path);
  });
}

geocert_status geocert_image_shape(const geocert_image* img, int* channels,
                                   int* rows, int* cols) {
  return guarded([&] {
    require(img, "image");
    if (channels) *channels = img->value.channels();
    if (rows) *rows = img->value.rows();
    if (cols) *cols = img->value.cols();
  });
}

geocert_status geocert_image_data(const geocert_image* img, double* out,
                                  size_t capacity) {
  return guarded([&] {
    require(img, "image");
    require(out, "out");
    const std::vector<double>& data = img->value.data();
    if (capacity < data.size())
      throw geocert::InvalidInput("output capacity below the pixel count");
    std::copy(data.begin(), data.end(), out);
  });
}

void geocert_image_free(geocert_image* img) { delete img; }

geocert_status geocert_network_load(const char* manifest_path,
                                    geocert_network** out) {
  return guarded([&] {
    require(manifest_path, "manifest path");
    require(out, "out");
    *out = new geocert_network{geocert::load_network(manifest_path)};
  });
}

geocert_status geocert_network_outputs(const geocert_network* net, int* out) {
  return guarded([&] {
    require(net, "network");
    require(out, "out");
    *out = net->value.outputs();
  });
}

geocert_status geocert_network_forward(const geocert_network* net,
                                       const geocert_image* img, double* out,
                                       size_t capacity) {
  return guarded([&] {
    require(net, "network");
    require(img, "image");
    require(out, "out");
    const std::vector<double> y = net->value.forward(img->value);
    if (capacity < y.size())
      throw geocert::InvalidInput("output capacity below the class count");
    std::copy(y.begin(), y.end(), out);
  });
}

void geocert_network_free(geocert_network* net) { delete net; }

geocert_status geocert_relaxation_build(const geocert_image* img,
                                        const char* config_json,
                                        geocert_relaxation** out) {
  return guarded([&] {
    require(img, "image");
    require(config_json, "config");
    require(out, "out");
    const geocert::CertificationConfig config =
        geocert::config_from_json_text(config_json);
    const geocert::TransformSpec spec(config.kind, img->value.rows(),
                                      img->value.cols());
    *out = new geocert_relaxation{geocert::build_relaxation(
        img->value, spec, config_box(config), config_options(config))};
  });
}

geocert_status geocert_relaxation_save(const geocert_relaxation* relax,
                                       const char* path) {
  return guarded([&] {
    require(relax, "relaxation");
    require(path, "path");
    geocert::save_relaxation(relax->value, path);
  });
}

geocert_status geocert_relaxation_load(const char* path,
                                       geocert_relaxation** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new geocert_relaxation{geocert::load_relaxation(path)};
  });
}

geocert_status geocert_relaxation_check(const geocert_relaxation* relax,
                                        const geocert_image* img,
                                        int64_t samples, double tolerance,
                                        int64_t* violations, double* worst) {
  return guarded([&] {
    require(relax, "relaxation");
    require(img, "image");
    const geocert::SoundnessReport report =
        geocert::check_soundness(relax->value, img->value, samples, tolerance);
    if (violations) *violations = report.violations;
    if (worst) *worst = report.worst;
  });
}

void geocert_relaxation_free(geocert_relaxation* relax) { delete relax; }

geocert_status geocert_certify_image(const geocert_network* net,
                                     const geocert_image* img, int label,
                                     const char* config_json, int* certified,
                                     double* margin) {
  return guarded([&] {
    require(net, "network");
    require(img, "image");
    require(config_json, "config");
    const geocert::CertificationConfig config =
        geocert::config_from_json_text(config_json);
    const geocert::ImageRecord rec =
        geocert::certify_image(net->value, img->value, label, config);
    if (certified) *certified = rec.certified ? 1 : 0;
    if (margin) {
      double m = std::numeric_limits<double>::infinity();
      bool any = false;
      for (const geocert::SubIntervalRecord& s : rec.intervals)
        if (s.evaluated) {
          m = std::min(m, s.margin);
          any = true;
        }
      *margin = any ? m : rec.clean_margin;
    }
  });
}

geocert_status geocert_certify_dataset(const geocert_network* net,
                                       const char* dataset_manifest,
                                       const char* config_json,
                                       char** report_json, char** summary) {
  return guarded([&] {
    require(net, "network");
    require(dataset_manifest, "dataset manifest");
    require(config_json, "config");
    const geocert::CertificationConfig config =
        geocert::config_from_json_text(config_json);
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<geocert::LabeledImage> dataset =
        geocert::load_dataset(dataset_manifest);
    const double load_seconds = seconds_since(t0);
    geocert::CertificationReport report =
        geocert::certify_dataset(net->value, dataset, config);
    report.load_seconds = load_seconds;
    if (report_json) *report_json = copy_string(geocert::report_to_json(report));
    if (summary) *summary = copy_string(geocert::report_summary(report));
  });
}

geocert_status geocert_curve(const geocert_image* img, int channel, int i,
                             int j, const char* config_json, int resolution,
                             char** csv) {
  return guarded([&] {
    require(img, "image");
    require(config_json, "config");
    require(csv, "csv");
    const geocert::CertificationConfig config =
        geocert::config_from_json_text(config_json);
    const geocert::TransformSpec spec(config.kind, img->value.rows(),
                                      img->value.cols());
    const geocert::CurveData curve =
        geocert::emit_curve(img->value, channel, i, j, spec, config_box(config),
                            config, resolution);
    *csv = copy_string(geocert::curve_to_csv(curve));
  });
}

}  // extern "C"
