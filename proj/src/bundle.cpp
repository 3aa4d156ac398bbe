#include "mta/bundle.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mta/errors.hpp"

namespace mta {

namespace fs = std::filesystem;

std::string class_set_file(int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "classes_%03d.f32", index);
  return name;
}

namespace {

std::uint32_t to_little_endian(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xFF000000u) >> 24) | ((bits & 0x00FF0000u) >> 8) |
           ((bits & 0x0000FF00u) << 8) | ((bits & 0x000000FFu) << 24);
  }
  return bits;
}

std::vector<float> read_floats(const fs::path& file, std::int64_t expected_count) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto expected_bytes = static_cast<std::uint64_t>(expected_count) * 4u;
  if (bytes.size() != expected_bytes) {
    throw SizeMismatchError(file.filename().string() + ": expected " +
                            std::to_string(expected_bytes) + " bytes, found " +
                            std::to_string(bytes.size()));
  }
  std::vector<float> out(static_cast<std::size_t>(expected_count));
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    bits = to_little_endian(bits);
    out[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(out[i])) {
      throw NonFiniteError(file.filename().string() + ": non-finite value at element " +
                           std::to_string(i));
    }
  }
  return out;
}

void write_floats(const fs::path& file, const std::vector<float>& values) {
  std::vector<char> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(values[i]));
    std::memcpy(bytes.data() + 4 * i, &bits, 4);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + file.string());
}

template <typename T>
T required(const nlohmann::json& header, const char* key) {
  if (!header.contains(key)) throw FormatError(std::string("bundle header is missing '") + key + "'");
  try {
    return header.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("bundle header field '") + key + "' has the wrong type");
  }
}

BundleHeader parse_header(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", std::string{}) != kBundleFormat) {
    throw FormatError(file.string() + ": not an mta-bundle header");
  }
  BundleHeader h;
  h.version = required<int>(j, "version");
  if (h.version > kBundleVersion) {
    throw FormatError("bundle version " + std::to_string(h.version) +
                      " is newer than the supported version " + std::to_string(kBundleVersion) +
                      "; upgrade this tool to read it");
  }
  if (h.version < 1) throw FormatError("invalid bundle version " + std::to_string(h.version));
  h.n_views = required<std::int64_t>(j, "n_views");
  h.n_classes = required<std::int64_t>(j, "n_classes");
  h.dim = required<std::int64_t>(j, "dim");
  h.n_prompt_sets = j.contains("n_prompt_sets") ? required<std::int64_t>(j, "n_prompt_sets") : 1;
  h.original_index = j.contains("original_index") ? required<std::int64_t>(j, "original_index") : 0;
  if (j.contains("temperature") && !j.at("temperature").is_null()) {
    h.temperature = required<double>(j, "temperature");
  }
  if (j.contains("class_names")) h.class_names = required<std::vector<std::string>>(j, "class_names");
  if (j.contains("label") && !j.at("label").is_null()) h.label = required<std::int64_t>(j, "label");
  if (j.contains("metadata")) h.metadata = j.at("metadata");
  return h;
}

void validate_header(const BundleHeader& h) {
  if (h.n_views < 1) throw FormatError("bundle must contain at least one view");
  if (h.dim < 1) throw FormatError("bundle dim must be >= 1");
  if (h.n_classes < 2) throw FormatError("bundle must contain at least two classes");
  if (h.n_prompt_sets < 1) throw FormatError("bundle must contain at least one prompt set");
  if (h.original_index < 0 || h.original_index >= h.n_views) {
    throw FormatError("original_index out of range");
  }
  if (!(h.temperature > 0.0) || !std::isfinite(h.temperature)) {
    throw FormatError("temperature must be finite and positive");
  }
  if (!h.class_names.empty() && static_cast<std::int64_t>(h.class_names.size()) != h.n_classes) {
    throw FormatError("class_names has " + std::to_string(h.class_names.size()) +
                      " entries for " + std::to_string(h.n_classes) + " classes");
  }
  if (h.label && (*h.label < 0 || *h.label >= h.n_classes)) {
    throw FormatError("label out of range");
  }
}

Matrix widen(const std::vector<float>& values, std::int64_t rows, std::int64_t cols) {
  Matrix out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) out(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  }
  return out;
}

std::vector<float> narrow(const Matrix& m) {
  std::vector<float> out(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      out[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<float>(m(r, c));
    }
  }
  return out;
}

}  // namespace

RawBundle read_raw_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError(dir.string() + " is not a bundle directory");
  RawBundle raw;
  raw.header = parse_header(dir / kBundleHeaderFile);
  validate_header(raw.header);
  const BundleHeader& h = raw.header;
  raw.views = read_floats(dir / kBundleViewsFile, h.n_views * h.dim);
  for (int s = 0; s < h.n_prompt_sets; ++s) {
    raw.class_sets.push_back(read_floats(dir / class_set_file(s), h.n_classes * h.dim));
  }
  return raw;
}

void write_raw_bundle(const RawBundle& bundle, const fs::path& dir) {
  const BundleHeader& h = bundle.header;
  validate_header(h);
  if (static_cast<std::int64_t>(bundle.views.size()) != h.n_views * h.dim ||
      static_cast<std::int64_t>(bundle.class_sets.size()) != h.n_prompt_sets) {
    throw SizeMismatchError("bundle payload does not match its header");
  }
  for (const auto& set : bundle.class_sets) {
    if (static_cast<std::int64_t>(set.size()) != h.n_classes * h.dim) {
      throw SizeMismatchError("class embedding set does not match its header");
    }
  }

  nlohmann::json j;
  j["format"] = kBundleFormat;
  j["version"] = h.version;
  j["n_views"] = h.n_views;
  j["n_classes"] = h.n_classes;
  j["dim"] = h.dim;
  j["n_prompt_sets"] = h.n_prompt_sets;
  j["original_index"] = h.original_index;
  j["temperature"] = h.temperature;
  j["class_names"] = h.class_names;
  if (h.label) j["label"] = *h.label;
  j["metadata"] = h.metadata;

  fs::create_directories(dir);
  {
    std::ofstream out(dir / kBundleHeaderFile, std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / kBundleHeaderFile).string());
    out << j.dump(2) << '\n';
  }
  write_floats(dir / kBundleViewsFile, bundle.views);
  for (std::size_t s = 0; s < bundle.class_sets.size(); ++s) {
    write_floats(dir / class_set_file(static_cast<int>(s)), bundle.class_sets[s]);
  }
}

Bundle read_bundle(const fs::path& dir) {
  RawBundle raw = read_raw_bundle(dir);
  const BundleHeader& h = raw.header;
  EmbeddingSet views(widen(raw.views, h.n_views, h.dim), h.original_index);
  std::vector<ClassEmbeddings> sets;
  sets.reserve(raw.class_sets.size());
  for (const auto& set : raw.class_sets) {
    sets.emplace_back(widen(set, h.n_classes, h.dim), h.temperature, h.class_names);
  }
  return Bundle{raw.header, std::move(views), std::move(sets)};
}

void write_bundle(const EmbeddingSet& views, std::span<const ClassEmbeddings> class_sets,
                  const BundleHeader& header, const fs::path& dir) {
  if (class_sets.empty()) throw FormatError("bundle needs at least one class embedding set");
  RawBundle raw;
  raw.header = header;
  raw.header.n_views = views.size();
  raw.header.dim = views.dim();
  raw.header.n_classes = class_sets.front().size();
  raw.header.n_prompt_sets = static_cast<std::int64_t>(class_sets.size());
  raw.header.original_index = views.original_index();
  raw.header.temperature = class_sets.front().temperature();
  if (raw.header.class_names.empty()) raw.header.class_names = class_sets.front().names();
  raw.views = narrow(views.views());
  for (const auto& set : class_sets) {
    if (set.size() != raw.header.n_classes || set.dim() != views.dim()) {
      throw InconsistentClassesError("class embedding sets disagree on shape");
    }
    raw.class_sets.push_back(narrow(set.classes()));
  }
  write_raw_bundle(raw, dir);
}

}  // namespace mta
