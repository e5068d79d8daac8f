#include "onionlens/curation/manifest.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace onionlens::curation {
namespace {

using nlohmann::json;

constexpr const char* kSchema = "onionlens-manifest";

void expect_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::size_t line) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw SchemaError("manifest line " + std::to_string(line) + ": unknown field '" + key + "'");
  }
}

template <typename T>
T required(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError("manifest line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw SchemaError("manifest line " + std::to_string(line) + ": field '" + key + "' has the wrong type");
  }
}

ManifestEntry parse_entry(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw SchemaError("manifest line " + std::to_string(line) + ": not an object");
  expect_keys(obj, {"path", "label", "dhash", "split", "source_url"}, line);
  ManifestEntry e;
  e.path = required<std::string>(obj, "path", line);
  if (e.path.empty()) throw SchemaError("manifest line " + std::to_string(line) + ": empty path");

  if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError("manifest line " + std::to_string(line) + ": label must be a string");
    try {
      e.label = resolve_category(it->get<std::string>());
    } catch (const UnknownLabel& u) {
      throw SchemaError("manifest line " + std::to_string(line) + ": " + u.what());
    }
  }

  const auto hex = required<std::string>(obj, "dhash", line);
  auto hash = parse_dhash(hex);
  if (!hash) throw SchemaError("manifest line " + std::to_string(line) + ": dhash must be 16 hex digits");
  e.dhash = *hash;

  if (auto it = obj.find("split"); it != obj.end() && !it->is_null()) {
    auto split = it->is_string() ? parse_split(it->get<std::string>()) : std::nullopt;
    if (!split) throw SchemaError("manifest line " + std::to_string(line) + ": split must be train, val or test");
    e.split = split;
  }
  if (auto it = obj.find("source_url"); it != obj.end() && !it->is_null()) {
    e.source_url = required<std::string>(obj, "source_url", line);
  }
  return e;
}

}  // namespace

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view s) noexcept {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

std::array<std::size_t, kCategoryCount> DatasetManifest::counts() const {
  std::array<std::size_t, kCategoryCount> c{};
  for (const auto& e : entries) {
    if (e.label) ++c[index_of(*e.label)];
  }
  return c;
}

std::size_t DatasetManifest::unlabeled() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.label ? 0 : 1;
  return n;
}

std::string format_dhash(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::optional<std::uint64_t> parse_dhash(std::string_view hex) noexcept {
  if (hex.size() != 16) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), v, 16);
  if (ec != std::errc{} || ptr != hex.data() + hex.size()) return std::nullopt;
  return v;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  const auto counts = manifest.counts();
  json header;
  header["schema"] = kSchema;
  header["version"] = kManifestVersion;
  header["total"] = manifest.entries.size();
  json c = json::object();
  for (Category cat : kAllCategories) c[std::string(canonical_id(cat))] = counts[index_of(cat)];
  header["counts"] = c;

  std::string out = header.dump() + "\n";
  for (const auto& e : manifest.entries) {
    json line;
    line["path"] = e.path;
    line["label"] = e.label ? json(std::string(canonical_id(*e.label))) : json(nullptr);
    line["dhash"] = format_dhash(e.dhash);
    line["split"] = e.split ? json(std::string(to_string(*e.split))) : json(nullptr);
    line["source_url"] = e.source_url;
    out += line.dump() + "\n";
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::optional<json> header;
  DatasetManifest manifest;
  std::set<std::string> paths;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      throw SchemaError("manifest line " + std::to_string(line_no) + ": invalid JSON");
    }
    if (!header) {
      if (!obj.is_object() || obj.value("schema", "") != kSchema) {
        throw SchemaError("manifest header missing or not an onionlens manifest");
      }
      expect_keys(obj, {"schema", "version", "counts", "total"}, line_no);
      if (required<int>(obj, "version", line_no) != kManifestVersion) {
        throw SchemaError("unsupported manifest version");
      }
      header = std::move(obj);
      continue;
    }
    auto entry = parse_entry(obj, line_no);
    if (!paths.insert(entry.path).second) {
      throw SchemaError("manifest line " + std::to_string(line_no) + ": duplicate path '" + entry.path + "'");
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (!header) throw SchemaError("manifest is empty (no header line)");

  const auto counts = manifest.counts();
  const json stored = header->value("counts", json::object());
  if (!stored.is_object()) throw SchemaError("manifest counts must be an object");
  std::array<std::size_t, kCategoryCount> declared{};
  for (const auto& [key, value] : stored.items()) {
    auto cat = try_resolve_category(key);
    if (!cat || !value.is_number_unsigned()) throw SchemaError("manifest counts: bad entry '" + key + "'");
    declared[index_of(*cat)] = value.get<std::size_t>();
  }
  if (declared != counts) throw SchemaError("manifest counts do not match its entries");
  if (auto t = header->find("total"); t != header->end() && t->get<std::size_t>() != manifest.entries.size()) {
    throw SchemaError("manifest total does not match its entries");
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << serialize_manifest(manifest);
    if (!out.flush()) throw IoError("cannot write manifest " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write manifest " + path.string() + ": " + ec.message());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

}  // namespace onionlens::curation
