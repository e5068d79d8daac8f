#include "onionlens/domain/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace onionlens {
namespace {

using nlohmann::json;
using Setter = std::function<void(PipelineConfig&, const json&)>;

template <typename T>
Setter field(T PipelineConfig::*member) {
  return [member](PipelineConfig& c, const json& v) { c.*member = v.get<T>(); };
}

template <typename Section, typename T>
Setter nested(Section PipelineConfig::*section, T Section::*member) {
  return [section, member](PipelineConfig& c, const json& v) {
    if constexpr (std::is_same_v<T, std::filesystem::path>) {
      (c.*section).*member = std::filesystem::path(v.get<std::string>());
    } else {
      (c.*section).*member = v.get<T>();
    }
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"proxy_url", field(&PipelineConfig::proxy_url)},
      {"user_agent", field(&PipelineConfig::user_agent)},
      {"allow_clearnet", field(&PipelineConfig::allow_clearnet)},
      {"max_pages", nested(&PipelineConfig::crawl, &CrawlLimits::max_pages)},
      {"max_depth", nested(&PipelineConfig::crawl, &CrawlLimits::max_depth)},
      {"per_host_delay_ms", nested(&PipelineConfig::crawl, &CrawlLimits::per_host_delay_ms)},
      {"timeout_ms", nested(&PipelineConfig::crawl, &CrawlLimits::timeout_ms)},
      {"retries", nested(&PipelineConfig::crawl, &CrawlLimits::retries)},
      {"backoff_ms", nested(&PipelineConfig::crawl, &CrawlLimits::backoff_ms)},
      {"crawl_workers", nested(&PipelineConfig::crawl, &CrawlLimits::workers)},
      {"max_page_bytes", nested(&PipelineConfig::crawl, &CrawlLimits::max_page_bytes)},
      {"max_image_bytes", nested(&PipelineConfig::crawl, &CrawlLimits::max_image_bytes)},
      {"max_images_per_scan", nested(&PipelineConfig::crawl, &CrawlLimits::max_images_per_scan)},
      {"dedup_threshold", field(&PipelineConfig::dedup_threshold)},
      {"min_side", field(&PipelineConfig::min_side)},
      {"k", nested(&PipelineConfig::keywords, &KeywordParams::k)},
      {"ngram_max", nested(&PipelineConfig::keywords, &KeywordParams::ngram_max)},
      {"mmr_lambda", nested(&PipelineConfig::keywords, &KeywordParams::mmr_lambda)},
      {"min_similarity", nested(&PipelineConfig::keywords, &KeywordParams::min_similarity)},
      {"model_path", nested(&PipelineConfig::paths, &ArtifactPaths::model)},
      {"embeddings_path", nested(&PipelineConfig::paths, &ArtifactPaths::embeddings)},
      {"prototypes_path", nested(&PipelineConfig::paths, &ArtifactPaths::prototypes)},
      {"stopwords_path", nested(&PipelineConfig::paths, &ArtifactPaths::stopwords)},
      {"job_store_path", nested(&PipelineConfig::paths, &ArtifactPaths::job_store)},
      {"bind", nested(&PipelineConfig::service, &ServiceParams::bind)},
      {"port", nested(&PipelineConfig::service, &ServiceParams::port)},
      {"scan_workers", nested(&PipelineConfig::service, &ServiceParams::scan_workers)},
  };
  return table;
}

void require(bool ok, const char* field, const char* why) {
  if (!ok) throw ValidationError(field, why);
}

}  // namespace

ValidationError::ValidationError(std::string field, const std::string& why)
    : ConfigError("invalid config field '" + field + "': " + why), field_(std::move(field)) {}

void PipelineConfig::validate() const {
  require(!proxy_url.empty(), "proxy_url", "must not be empty");
  require(crawl.max_pages > 0, "max_pages", "must be > 0");
  require(crawl.max_depth > 0, "max_depth", "must be > 0");
  require(crawl.per_host_delay_ms > 0, "per_host_delay_ms", "must be > 0");
  require(crawl.timeout_ms > 0, "timeout_ms", "must be > 0");
  require(crawl.retries > 0, "retries", "must be > 0");
  require(crawl.backoff_ms > 0, "backoff_ms", "must be > 0");
  require(crawl.workers > 0, "crawl_workers", "must be > 0");
  require(crawl.max_page_bytes > 0, "max_page_bytes", "must be > 0");
  require(crawl.max_image_bytes > 0, "max_image_bytes", "must be > 0");
  require(crawl.max_images_per_scan > 0, "max_images_per_scan", "must be > 0");
  require(dedup_threshold >= 0 && dedup_threshold <= 64, "dedup_threshold", "must be in [0, 64]");
  require(min_side > 0, "min_side", "must be > 0");
  require(keywords.k > 0, "k", "must be > 0");
  require(keywords.ngram_max > 0, "ngram_max", "must be > 0");
  require(keywords.mmr_lambda >= 0.0 && keywords.mmr_lambda <= 1.0, "mmr_lambda",
          "must be in [0, 1]");
  require(keywords.min_similarity >= -1.0 && keywords.min_similarity <= 1.0, "min_similarity",
          "must be in [-1, 1]");
  require(service.port > 0 && service.port < 65536, "port", "must be in [1, 65535]");
  require(service.scan_workers > 0, "scan_workers", "must be > 0");
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig config;
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return config;

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config must be a JSON object");

  const auto& table = setters();
  for (const auto& [key, value] : doc.items()) {
    auto it = table.find(key);
    if (it == table.end()) throw ValidationError(key, "unknown field");
    try {
      it->second(config, value);
    } catch (const json::exception&) {
      throw ValidationError(key, "wrong type");
    }
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_environment(PipelineConfig& config) {
  if (const char* proxy = std::getenv(kProxyEnv); proxy != nullptr && *proxy != '\0') {
    config.proxy_url = proxy;
  }
}

}  // namespace onionlens
