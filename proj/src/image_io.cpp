#include "geocert/image_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "geocert/errors.hpp"

namespace geocert {
namespace {

using nlohmann::json;

std::string extension_of(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

std::string sibling(const std::string& manifest_path, const std::string& entry) {
  return (std::filesystem::path(manifest_path).parent_path() /
          std::filesystem::path(entry))
      .string();
}

// Next PGM header token, skipping whitespace and '#' comments. The single
// whitespace terminating the token is consumed, which for P5 is exactly the
// delimiter before the binary payload.
std::string header_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      c = in.get();
      continue;
    }
    if (!std::isspace(c)) break;
    c = in.get();
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

int header_int(std::istream& in, const std::string& path, const char* what) {
  const std::string tok = header_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError(path + ": malformed PGM " + what);
  }
}

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw IoError(path + ": invalid JSON: " + e.what());
  }
  return doc;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::vector<double> number_array(const json& doc, const char* field,
                                 const std::string& path) {
  try {
    return doc.at(field).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw InvalidInput(path + ": field '" + field + "': " + e.what());
  }
}

void require_unit_range(const std::vector<double>& values, const std::string& path) {
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0))
      throw InvalidInput(path + ": pixel values must lie in [0,1]");
}

}  // namespace

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::string magic = header_token(in);
  if (magic != "P2" && magic != "P5")
    throw IoError(path + ": unsupported PGM magic '" + magic + "'");
  const int cols = header_int(in, path, "width");
  const int rows = header_int(in, path, "height");
  const int maxval = header_int(in, path, "maxval");
  if (cols < 1 || rows < 1) throw IoError(path + ": non-positive PGM size");
  if (maxval < 1 || maxval > 65535) throw IoError(path + ": PGM maxval out of range");

  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  std::vector<double> data(count);
  if (magic == "P2") {
    for (std::size_t k = 0; k < count; ++k) {
      long v = 0;
      if (!(in >> v)) throw IoError(path + ": truncated PGM pixel data");
      if (v < 0 || v > maxval) throw IoError(path + ": PGM pixel exceeds maxval");
      data[k] = static_cast<double>(v) / maxval;
    }
  } else {
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
      throw IoError(path + ": truncated PGM pixel data");
    for (std::size_t k = 0; k < count; ++k) {
      const long v = bytes == 1
                         ? raw[k]
                         : (static_cast<long>(raw[2 * k]) << 8) | raw[2 * k + 1];
      if (v > maxval) throw IoError(path + ": PGM pixel exceeds maxval");
      data[k] = static_cast<double>(v) / maxval;
    }
  }
  return Image(Shape{1, rows, cols}, std::move(data));
}

Image load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> data;
  int cols = -1, rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream cells(line);
    std::string cell;
    int row_cols = 0;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        data.push_back(std::stod(cell, &used));
        while (used < cell.size() &&
               std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IoError(path + ": malformed CSV cell '" + cell + "'");
      }
      ++row_cols;
    }
    if (cols < 0) cols = row_cols;
    else if (row_cols != cols)
      throw IoError(path + ": CSV rows have unequal lengths");
    ++rows;
  }
  if (rows == 0) throw IoError(path + ": empty CSV image");
  require_unit_range(data, path);
  return Image(Shape{1, rows, cols}, std::move(data));
}

Image load_image_manifest(const std::string& path) {
  const json doc = parse_json_file(path);
  std::vector<std::string> files;
  try {
    files = doc.at("channels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw InvalidInput(path + ": field 'channels': " + e.what());
  }
  if (files.empty()) throw InvalidInput(path + ": manifest lists no channels");

  std::vector<Image> planes;
  planes.reserve(files.size());
  for (const std::string& f : files) {
    const std::string ext = extension_of(f);
    const std::string full = sibling(path, f);
    if (ext == ".pgm") planes.push_back(load_pgm(full));
    else if (ext == ".csv") planes.push_back(load_csv(full));
    else throw InvalidInput(path + ": channel file '" + f + "' must be .pgm or .csv");
    if (planes.back().shape() != planes.front().shape())
      throw InvalidInput(path + ": channel files differ in size");
  }
  const int rows = planes.front().rows(), cols = planes.front().cols();
  Image img(static_cast<int>(planes.size()), rows, cols);
  for (std::size_t c = 0; c < planes.size(); ++c)
    for (int i = 1; i <= rows; ++i)
      for (int j = 1; j <= cols; ++j)
        img.at(static_cast<int>(c), i, j) = planes[c].at(0, i, j);
  return img;
}

Image load_image(const std::string& path) {
  const std::string ext = extension_of(path);
  if (ext == ".pgm") return load_pgm(path);
  if (ext == ".csv") return load_csv(path);
  if (ext == ".json") return load_image_manifest(path);
  throw InvalidInput("unrecognized image extension '" + ext + "' in " + path);
}

void save_pgm(const Image& img, const std::string& path, int maxval) {
  if (img.channels() != 1)
    throw InvalidInput("PGM output is single-channel; use a manifest for " +
                       std::to_string(img.channels()) + " channels");
  if (maxval < 1 || maxval > 65535) throw InvalidInput("PGM maxval out of range");
  require_unit_range(img.data(), path);
  std::ostringstream out;
  out << "P2\n" << img.cols() << ' ' << img.rows() << '\n' << maxval << '\n';
  for (int i = 1; i <= img.rows(); ++i) {
    for (int j = 1; j <= img.cols(); ++j)
      out << (j > 1 ? " " : "") << std::llround(img.at(0, i, j) * maxval);
    out << '\n';
  }
  write_text_file(path, out.str());
}

void save_csv(const Image& img, const std::string& path) {
  if (img.channels() != 1)
    throw InvalidInput("CSV output is single-channel; use a manifest for " +
                       std::to_string(img.channels()) + " channels");
  std::ostringstream out;
  out.precision(17);
  for (int i = 1; i <= img.rows(); ++i) {
    for (int j = 1; j <= img.cols(); ++j)
      out << (j > 1 ? "," : "") << img.at(0, i, j);
    out << '\n';
  }
  write_text_file(path, out.str());
}

void save_image_manifest(const Image& img, const std::string& path) {
  const std::filesystem::path base(path);
  json doc;
  doc["channels"] = json::array();
  for (int c = 0; c < img.channels(); ++c) {
    std::filesystem::path plane = base;
    plane.replace_extension(".c" + std::to_string(c) + ".csv");
    Image one(1, img.rows(), img.cols());
    for (int i = 1; i <= img.rows(); ++i)
      for (int j = 1; j <= img.cols(); ++j) one.at(0, i, j) = img.at(c, i, j);
    save_csv(one, plane.string());
    doc["channels"].push_back(plane.filename().string());
  }
  write_text_file(path, doc.dump(2) + "\n");
}

void save_image(const Image& img, const std::string& path) {
  const std::string ext = extension_of(path);
  if (ext == ".pgm") return save_pgm(img, path);
  if (ext == ".csv") return save_csv(img, path);
  if (ext == ".json") return save_image_manifest(img, path);
  throw InvalidInput("unrecognized image extension '" + ext + "' in " + path);
}

std::vector<LabeledImage> load_dataset(const std::string& manifest_path) {
  const json doc = parse_json_file(manifest_path);
  if (!doc.contains("entries") || !doc.at("entries").is_array())
    throw InvalidInput(manifest_path + ": dataset manifest needs an 'entries' array");
  std::vector<LabeledImage> out;
  out.reserve(doc.at("entries").size());
  for (const json& entry : doc.at("entries")) {
    std::string file;
    int label = 0;
    try {
      file = entry.at("image").get<std::string>();
      label = entry.at("label").get<int>();
    } catch (const json::exception& e) {
      throw InvalidInput(manifest_path + ": bad dataset entry: " + e.what());
    }
    if (label < 0) throw InvalidInput(manifest_path + ": negative label for " + file);
    out.push_back({load_image(sibling(manifest_path, file)), label, file});
  }
  return out;
}

void save_relaxation(const LinearRelaxation& relax, const std::string& path) {
  auto require_finite = [&](const std::vector<double>& v, const char* what) {
    for (double x : v)
      if (!std::isfinite(x))
        throw InvalidInput(std::string("relaxation has non-finite ") + what);
  };
  require_finite(relax.bounds.a_low, "slopes");
  require_finite(relax.bounds.a_up, "slopes");
  require_finite(relax.bounds.b_low, "intercepts");
  require_finite(relax.bounds.b_up, "intercepts");
  require_finite(relax.delta_low, "corrections");
  require_finite(relax.delta_up, "corrections");

  json doc;
  doc["transform"] = {{"kind", transform_kind_name(relax.spec.kind)},
                      {"rows", relax.spec.rows},
                      {"cols", relax.spec.cols}};
  doc["box"] = {{"lo", relax.box.lo}, {"hi", relax.box.hi}};
  doc["shape"] = {{"channels", relax.shape.channels},
                  {"rows", relax.shape.rows},
                  {"cols", relax.shape.cols}};
  doc["samples"] = relax.samples;
  doc["subdivisions"] = relax.subdivisions;
  doc["per_cell_lipschitz"] = relax.per_cell_lipschitz;
  doc["bounds"] = {{"a_low", relax.bounds.a_low},
                   {"a_up", relax.bounds.a_up},
                   {"b_low", relax.bounds.b_low},
                   {"b_up", relax.bounds.b_up}};
  doc["delta_low"] = relax.delta_low;
  doc["delta_up"] = relax.delta_up;
  write_text_file(path, doc.dump() + "\n");
}

LinearRelaxation load_relaxation(const std::string& path) {
  const json doc = parse_json_file(path);
  LinearRelaxation relax;
  try {
    const json& tr = doc.at("transform");
    relax.spec = TransformSpec(transform_kind_from_name(tr.at("kind").get<std::string>()),
                               tr.at("rows").get<int>(), tr.at("cols").get<int>());
    const json& box = doc.at("box");
    relax.box = ParamBox(box.at("lo").get<std::vector<double>>(),
                         box.at("hi").get<std::vector<double>>());
    const json& sh = doc.at("shape");
    relax.shape = Shape{sh.at("channels").get<int>(), sh.at("rows").get<int>(),
                        sh.at("cols").get<int>()};
    relax.samples = doc.at("samples").get<int>();
    relax.subdivisions = doc.at("subdivisions").get<int>();
    relax.per_cell_lipschitz = doc.value("per_cell_lipschitz", true);
  } catch (const json::exception& e) {
    throw InvalidInput(path + ": " + e.what());
  }
  if (relax.shape.channels < 1 || relax.shape.rows < 1 || relax.shape.cols < 1)
    throw InvalidInput(path + ": non-positive image shape");
  if (relax.spec.rows != relax.shape.rows || relax.spec.cols != relax.shape.cols)
    throw InvalidInput(path + ": transform size differs from image shape");
  if (relax.box.dims() != relax.spec.dims())
    throw InvalidInput(path + ": box dimension differs from transform dimension");
  check_box(relax.spec, relax.box);

  const std::size_t pixels = relax.shape.size();
  const std::size_t slopes = static_cast<std::size_t>(relax.box.dims()) * pixels;
  relax.bounds = AffineBoundPair(relax.box.dims(), pixels);
  const json& bounds = doc.contains("bounds") ? doc.at("bounds") : doc;
  relax.bounds.a_low = number_array(bounds, "a_low", path);
  relax.bounds.a_up = number_array(bounds, "a_up", path);
  relax.bounds.b_low = number_array(bounds, "b_low", path);
  relax.bounds.b_up = number_array(bounds, "b_up", path);
  relax.delta_low = number_array(doc, "delta_low", path);
  relax.delta_up = number_array(doc, "delta_up", path);

  if (relax.bounds.a_low.size() != slopes || relax.bounds.a_up.size() != slopes)
    throw InvalidInput(path + ": slope array size differs from dims * pixels");
  if (relax.bounds.b_low.size() != pixels || relax.bounds.b_up.size() != pixels ||
      relax.delta_low.size() != pixels || relax.delta_up.size() != pixels)
    throw InvalidInput(path + ": per-pixel array size differs from pixel count");
  for (std::size_t k = 0; k < pixels; ++k)
    if (relax.delta_low[k] > 0.0 || relax.delta_up[k] < 0.0)
      throw InvalidInput(path + ": corrections must satisfy delta_low <= 0 <= delta_up");
  return relax;
}

}  // namespace geocert
