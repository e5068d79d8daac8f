#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onionlens/harvester/fetch.hpp"

namespace onionlens::harvester {

struct CrawlErrorEntry {
  std::string url;
  FetchErrorKind kind;
  std::string message;
};

struct CrawlStats {
  int pages_fetched = 0;
  int images_discovered = 0;
  std::int64_t bytes_downloaded = 0;
};

struct CrawlResult {
  std::vector<PageSnapshot> pages;  // BFS order, unique by normalized URL
  std::vector<CrawlErrorEntry> errors;
  CrawlStats stats;
};

class AllSeedsFailed : public Error {
 public:
  explicit AllSeedsFailed(std::vector<CrawlErrorEntry> errors);
  const std::vector<CrawlErrorEntry>& errors() const noexcept { return errors_; }

 private:
  std::vector<CrawlErrorEntry> errors_;
};

/// Breadth-first crawl restricted to the seed hosts. Each depth level is
/// fetched by a pool of config.crawl.workers threads; the result order does
/// not depend on scheduling. Seeds that violate the onion policy are
/// recorded as errors. Throws AllSeedsFailed when no page was fetched.
CrawlResult crawl(const std::vector<std::string>& seeds, const PipelineConfig& config);
/// Same, sharing the client's rate limiter with later requests.
CrawlResult crawl(const std::vector<std::string>& seeds, const HttpClient& client);

}  // namespace onionlens::harvester
