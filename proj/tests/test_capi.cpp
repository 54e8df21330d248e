#include "doctest.h"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "geocert.h"

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// Two-class constant classifier: out = {1, 0} for every input.
std::string constant_net_manifest(int rows, int cols) {
  const int n = rows * cols;
  std::string weights = "[";
  for (int k = 0; k < 2 * n; ++k) weights += (k ? ",0" : "0");
  weights += "]";
  return std::string(R"({"input_shape": {"channels": 1, "rows": )") +
         std::to_string(rows) + R"(, "cols": )" + std::to_string(cols) +
         R"(}, "layers": [{"type": "flatten"}, {"type": "dense", "weights": )" +
         weights + R"(, "bias": [1, 0]}]})";
}

const char* kRotationConfig =
    R"({"transform": "rotation", "range": {"lo": -2, "hi": 2},)"
    R"( "interval_size": 4, "samples": 8, "subdivisions": 15})";

}  // namespace

TEST_CASE("version and error strings behave") {
  REQUIRE(geocert_version() != nullptr);
  CHECK(std::string(geocert_version()).find('.') != std::string::npos);

  geocert_image* img = nullptr;
  CHECK(geocert_image_load(temp_path("geocert_capi_absent.pgm").c_str(), &img) ==
        GEOCERT_IO_ERROR);
  CHECK(img == nullptr);
  CHECK(std::string(geocert_last_error()).size() > 0);

  // A successful call clears the message again.
  std::vector<double> data(4, 0.5);
  REQUIRE(geocert_image_create(1, 2, 2, data.data(), &img) == GEOCERT_OK);
  CHECK(std::string(geocert_last_error()).empty());
  geocert_image_free(img);
}

TEST_CASE("images flow across the boundary") {
  std::vector<double> data;
  for (int k = 0; k < 12; ++k) data.push_back((k * 17 % 256) / 255.0);
  geocert_image* img = nullptr;
  REQUIRE(geocert_image_create(1, 3, 4, data.data(), &img) == GEOCERT_OK);

  int channels = 0, rows = 0, cols = 0;
  REQUIRE(geocert_image_shape(img, &channels, &rows, &cols) == GEOCERT_OK);
  CHECK(channels == 1);
  CHECK(rows == 3);
  CHECK(cols == 4);

  std::vector<double> copy(12, -1.0);
  REQUIRE(geocert_image_data(img, copy.data(), copy.size()) == GEOCERT_OK);
  CHECK(copy == data);
  CHECK(geocert_image_data(img, copy.data(), 3) == GEOCERT_INVALID_ARGUMENT);

  const std::string path = temp_path("geocert_capi_roundtrip.pgm");
  REQUIRE(geocert_image_save(img, path.c_str()) == GEOCERT_OK);
  geocert_image* back = nullptr;
  REQUIRE(geocert_image_load(path.c_str(), &back) == GEOCERT_OK);
  std::vector<double> reloaded(12, -1.0);
  REQUIRE(geocert_image_data(back, reloaded.data(), reloaded.size()) == GEOCERT_OK);
  CHECK(reloaded == data);

  CHECK(geocert_image_create(0, 2, 2, data.data(), &img) ==
        GEOCERT_INVALID_ARGUMENT);
  CHECK(geocert_image_save(nullptr, path.c_str()) == GEOCERT_INVALID_ARGUMENT);
  CHECK(geocert_image_load(path.c_str(), nullptr) == GEOCERT_INVALID_ARGUMENT);

  geocert_image_free(img);
  geocert_image_free(back);
  geocert_image_free(nullptr);  // must be a no-op
}

TEST_CASE("networks load and evaluate") {
  const std::string manifest = temp_path("geocert_capi_net.json");
  write_file(manifest,
             R"({"input_shape": {"channels": 1, "rows": 1, "cols": 1},)"
             R"( "layers": [{"type": "flatten"},)"
             R"( {"type": "dense", "weights": [2], "bias": [1]}]})");
  geocert_network* net = nullptr;
  REQUIRE(geocert_network_load(manifest.c_str(), &net) == GEOCERT_OK);

  int outputs = 0;
  REQUIRE(geocert_network_outputs(net, &outputs) == GEOCERT_OK);
  CHECK(outputs == 1);

  const double pixel = 0.5;
  geocert_image* img = nullptr;
  REQUIRE(geocert_image_create(1, 1, 1, &pixel, &img) == GEOCERT_OK);
  double y = 0.0;
  REQUIRE(geocert_network_forward(net, img, &y, 1) == GEOCERT_OK);
  CHECK(y == 2.0);
  CHECK(geocert_network_forward(net, img, &y, 0) == GEOCERT_INVALID_ARGUMENT);

  CHECK(geocert_network_load(temp_path("geocert_capi_absent.json").c_str(), &net) ==
        GEOCERT_IO_ERROR);

  geocert_image_free(img);
  geocert_network_free(net);
  geocert_network_free(nullptr);
}

TEST_CASE("relaxations build, persist, and check sound") {
  std::vector<double> data;
  for (int k = 0; k < 25; ++k) data.push_back((k * 29 % 97) / 96.0);
  geocert_image* img = nullptr;
  REQUIRE(geocert_image_create(1, 5, 5, data.data(), &img) == GEOCERT_OK);

  geocert_relaxation* relax = nullptr;
  REQUIRE(geocert_relaxation_build(img, kRotationConfig, &relax) == GEOCERT_OK);

  int64_t violations = -1;
  double worst = -1.0;
  REQUIRE(geocert_relaxation_check(relax, img, 2000, 1e-9, &violations, &worst) ==
          GEOCERT_OK);
  CHECK(violations == 0);
  CHECK(worst == 0.0);

  const std::string path = temp_path("geocert_capi_relax.json");
  REQUIRE(geocert_relaxation_save(relax, path.c_str()) == GEOCERT_OK);
  geocert_relaxation* loaded = nullptr;
  REQUIRE(geocert_relaxation_load(path.c_str(), &loaded) == GEOCERT_OK);
  REQUIRE(geocert_relaxation_check(loaded, img, 500, 1e-9, &violations, &worst) ==
          GEOCERT_OK);
  CHECK(violations == 0);

  // Configuration errors surface as INVALID_ARGUMENT with a message.
  geocert_relaxation* bad = nullptr;
  const char* both =
      R"({"transform": "rotation", "range": {"lo": -2, "hi": 2},)"
      R"( "interval_size": 4, "subdivisions": 15, "epsilon": 0.01})";
  CHECK(geocert_relaxation_build(img, both, &bad) == GEOCERT_INVALID_ARGUMENT);
  CHECK(std::string(geocert_last_error()).find("exactly one") != std::string::npos);

  // The scaling range crossing factor zero is a singular transform.
  const char* singular =
      R"({"transform": "scaling", "range": {"lo": -150, "hi": 0},)"
      R"( "interval_size": 150, "subdivisions": 5})";
  CHECK(geocert_relaxation_build(img, singular, &bad) ==
        GEOCERT_SINGULAR_TRANSFORM);

  // Translation meshes grow quadratically; the cell budget caps them.
  const char* huge =
      R"({"transform": "translation", "range": {"lo": -1, "hi": 1},)"
      R"( "interval_size": 2, "subdivisions": 1001})";
  CHECK(geocert_relaxation_build(img, huge, &bad) == GEOCERT_RESOURCE_LIMIT);

  geocert_relaxation_free(relax);
  geocert_relaxation_free(loaded);
  geocert_relaxation_free(nullptr);
  geocert_image_free(img);
}

TEST_CASE("certification and curves run end to end") {
  const std::string net_path = temp_path("geocert_capi_const_net.json");
  write_file(net_path, constant_net_manifest(4, 4));
  geocert_network* net = nullptr;
  REQUIRE(geocert_network_load(net_path.c_str(), &net) == GEOCERT_OK);

  std::vector<double> data(16, 0.25);
  geocert_image* img = nullptr;
  REQUIRE(geocert_image_create(1, 4, 4, data.data(), &img) == GEOCERT_OK);

  int certified = -1;
  double margin = 0.0;
  REQUIRE(geocert_certify_image(net, img, 0, kRotationConfig, &certified,
                                &margin) == GEOCERT_OK);
  CHECK(certified == 1);
  CHECK(margin > 0.5);

  REQUIRE(geocert_certify_image(net, img, 1, kRotationConfig, &certified,
                                &margin) == GEOCERT_OK);
  CHECK(certified == 0);
  CHECK(margin < 0.0);

  const std::string dir = std::filesystem::temp_directory_path().string();
  const std::string img_path = dir + "/geocert_capi_ds0.csv";
  REQUIRE(geocert_image_save(img, img_path.c_str()) == GEOCERT_OK);
  const std::string ds_path = temp_path("geocert_capi_dataset.json");
  write_file(ds_path,
             R"({"entries": [{"image": "geocert_capi_ds0.csv", "label": 0},)"
             R"( {"image": "geocert_capi_ds0.csv", "label": 1}]})");

  char* report = nullptr;
  char* summary = nullptr;
  REQUIRE(geocert_certify_dataset(net, ds_path.c_str(), kRotationConfig, &report,
                                  &summary) == GEOCERT_OK);
  REQUIRE(report != nullptr);
  REQUIRE(summary != nullptr);
  CHECK(std::string(report).find("certified_pct") != std::string::npos);
  CHECK(std::string(report).find("\"certified\": 1") != std::string::npos);
  CHECK(std::string(summary).find("certified") != std::string::npos);
  geocert_string_free(report);
  geocert_string_free(summary);

  char* csv = nullptr;
  REQUIRE(geocert_curve(img, 0, 2, 2, kRotationConfig, 21, &csv) == GEOCERT_OK);
  REQUIRE(csv != nullptr);
  CHECK(std::strncmp(csv, "# pixel=", 8) == 0);
  CHECK(std::string(csv).find("\nsample,") != std::string::npos);
  geocert_string_free(csv);
  geocert_string_free(nullptr);

  geocert_image_free(img);
  geocert_network_free(net);
}
