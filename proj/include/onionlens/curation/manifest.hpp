#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "onionlens/domain/category.hpp"
#include "onionlens/error.hpp"

namespace onionlens::curation {

enum class Split { train, val, test };

std::string_view to_string(Split s) noexcept;
std::optional<Split> parse_split(std::string_view s) noexcept;

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::optional<Category> label;
  std::uint64_t dhash = 0;
  std::optional<Split> split;
  std::string source_url;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Dataset index; the header line stores per-category counts, which are
/// recomputed and cross-checked on load.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::array<std::size_t, kCategoryCount> counts() const;
  std::size_t unlabeled() const;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kManifestVersion = 1;

std::string format_dhash(std::uint64_t hash);
std::optional<std::uint64_t> parse_dhash(std::string_view hex) noexcept;

/// JSON Lines: a header object {schema, version, counts, total} followed by
/// one {path, label, dhash, split, source_url} object per entry.
std::string serialize_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace onionlens::curation
