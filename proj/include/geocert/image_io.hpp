#pragma once

#include <string>
#include <vector>

#include "geocert/image.hpp"
#include "geocert/relaxation.hpp"

namespace geocert {

// Image file loading. Formats, chosen for dependency-free ingestion:
//   .pgm  -- P2 (ASCII) or P5 (binary, 8- or 16-bit), values divided by the
//           header maxval so loaded intensities are always in [0,1];
//   .csv  -- one channel as comma-separated rows, values must already be in
//           [0,1];
//   .json -- multi-channel manifest {"channels": ["file", ...]} where each
//           listed file is a single-channel .pgm or .csv of identical size,
//           paths relative to the manifest.
// load_image dispatches on the (case-insensitive) extension.
Image load_image(const std::string& path);
Image load_pgm(const std::string& path);
Image load_csv(const std::string& path);
Image load_image_manifest(const std::string& path);

// Saving. PGM output is quantized to maxval levels (lossy); CSV output is
// full precision and round-trips exactly; the manifest writer emits one CSV
// per channel next to the manifest. save_image dispatches like load_image.
void save_image(const Image& img, const std::string& path);
void save_pgm(const Image& img, const std::string& path, int maxval = 255);
void save_csv(const Image& img, const std::string& path);
void save_image_manifest(const Image& img, const std::string& path);

// Labeled dataset manifest: {"entries": [{"image": path, "label": int},...]}
// with image paths relative to the manifest. Images are loaded eagerly so
// the pipeline can time the load phase separately from compute.
struct LabeledImage {
  Image image;
  int label = 0;
  std::string name;  // the path as written in the manifest
};
std::vector<LabeledImage> load_dataset(const std::string& manifest_path);

// Relaxation serialization (JSON, full-precision numbers). The saved file
// carries everything check_soundness and the verifiers need: transform,
// box, shape, affine bounds, corrections, and the P/N used to build them.
void save_relaxation(const LinearRelaxation& relax, const std::string& path);
LinearRelaxation load_relaxation(const std::string& path);

}  // namespace geocert
