#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "onionlens/error.hpp"

namespace onionlens {

inline constexpr const char* kDefaultProxy = "socks5h://127.0.0.1:9050";
inline constexpr const char* kProxyEnv = "ONIONLENS_PROXY";
inline constexpr const char* kConfigEnv = "ONIONLENS_CONFIG";

struct CrawlLimits {
  int max_pages = 20;
  int max_depth = 2;
  int per_host_delay_ms = 1000;
  int timeout_ms = 30000;
  int retries = 3;          // total attempts per request
  int backoff_ms = 500;     // first retry delay, doubled each retry
  int workers = 4;
  std::int64_t max_page_bytes = 4 << 20;
  std::int64_t max_image_bytes = 8 << 20;
  int max_images_per_scan = 50;
};

struct KeywordParams {
  int k = 10;
  int ngram_max = 2;
  double mmr_lambda = 0.5;
  double min_similarity = 0.15;  // tau
};

struct ArtifactPaths {
  std::filesystem::path model;
  std::filesystem::path embeddings;
  std::filesystem::path prototypes;  // empty: built-in seed terms
  std::filesystem::path stopwords;   // empty: built-in English list
  std::filesystem::path job_store = "onionlens-jobs";
};

struct ServiceParams {
  std::string bind = "127.0.0.1";
  int port = 8080;
  int scan_workers = 2;
};

struct PipelineConfig {
  std::string proxy_url = kDefaultProxy;
  std::string user_agent = "Mozilla/5.0 (Windows NT 10.0; rv:115.0) Gecko/20100101 Firefox/115.0";
  bool allow_clearnet = false;
  CrawlLimits crawl;
  int dedup_threshold = 4;
  int min_side = 64;
  KeywordParams keywords;
  ArtifactPaths paths;
  ServiceParams service;

  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ValidationError : public ConfigError {
 public:
  ValidationError(std::string field, const std::string& why);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Reads a flat JSON object of overrides; absent keys keep their defaults and
/// an empty (or whitespace-only) file yields the default config.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view text);

/// Applies ONIONLENS_PROXY when set.
void apply_environment(PipelineConfig& config);

}  // namespace onionlens
