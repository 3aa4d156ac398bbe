#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mta/embedding.hpp"

namespace mta {

// A sample bundle is a directory holding
//   bundle.json          header (see BundleHeader)
//   views.f32            n_views x dim float32, little-endian, row-major
//   classes_000.f32 ...  one n_classes x dim float32 matrix per prompt set
inline constexpr int kBundleVersion = 1;
inline constexpr const char* kBundleFormat = "mta-bundle";
inline constexpr const char* kBundleHeaderFile = "bundle.json";
inline constexpr const char* kBundleViewsFile = "views.f32";

/// File name of prompt set `index` ("classes_007.f32").
std::string class_set_file(int index);

struct BundleHeader {
  int version = kBundleVersion;
  std::int64_t n_views = 0;
  std::int64_t n_classes = 0;
  std::int64_t dim = 0;
  std::int64_t n_prompt_sets = 1;
  std::int64_t original_index = 0;
  double temperature = kDefaultTemperature;
  std::vector<std::string> class_names;
  std::optional<std::int64_t> label;  // ground truth, when known
  nlohmann::json metadata = nlohmann::json::object();  // passed through untouched
};

/// Header plus the float32 payloads exactly as stored on disk.
struct RawBundle {
  BundleHeader header;
  std::vector<float> views;
  std::vector<std::vector<float>> class_sets;
};

struct Bundle {
  BundleHeader header;
  EmbeddingSet views;
  std::vector<ClassEmbeddings> class_sets;
};

/// Parses and validates a bundle without normalizing anything.
/// Throws FormatError (bad header, magic or version), SizeMismatchError
/// (payload length) or NonFiniteError.
RawBundle read_raw_bundle(const std::filesystem::path& dir);

/// Deterministic: identical input gives identical bytes.
void write_raw_bundle(const RawBundle& bundle, const std::filesystem::path& dir);

/// read_raw_bundle, then widen to double and re-normalize every row.
Bundle read_bundle(const std::filesystem::path& dir);

/// Narrows to float32 and writes. Header dims are filled from the data.
void write_bundle(const EmbeddingSet& views, std::span<const ClassEmbeddings> class_sets,
                  const BundleHeader& header, const std::filesystem::path& dir);

}  // namespace mta
