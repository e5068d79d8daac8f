#include "onionlens/harvester/crawler.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <set>
#include <stdexcept>
#include <thread>
#include <variant>

namespace onionlens::harvester {
namespace {

struct Outcome {
  std::optional<PageSnapshot> page;
  std::optional<CrawlErrorEntry> error;
};

// Fetches urls[i] into outcomes[i] with a fixed number of workers.
void fetch_batch(const std::vector<std::string>& urls, const HttpClient& client, int workers,
                 std::vector<Outcome>& outcomes) {
  outcomes.assign(urls.size(), {});
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < urls.size(); i = next++) {
      try {
        outcomes[i].page = fetch_page(urls[i], client);
      } catch (const FetchError& e) {
        outcomes[i].error = CrawlErrorEntry{urls[i], e.kind(), e.what()};
      }
    }
  };
  const auto width = std::min<std::size_t>(static_cast<std::size_t>(workers), urls.size());
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < width; ++w) pool.emplace_back(work);
  work();
}

}  // namespace

AllSeedsFailed::AllSeedsFailed(std::vector<CrawlErrorEntry> errors)
    : Error("no page could be fetched from any seed (" + std::to_string(errors.size()) + " errors)"),
      errors_(std::move(errors)) {}

CrawlResult crawl(const std::vector<std::string>& seeds, const PipelineConfig& config) {
  HostRateLimiter limiter(std::chrono::milliseconds(config.crawl.per_host_delay_ms));
  const HttpClient client(config, &limiter);
  return crawl(seeds, client);
}

CrawlResult crawl(const std::vector<std::string>& seeds, const HttpClient& client) {
  if (seeds.empty()) throw std::invalid_argument("crawl requires at least one seed");
  const PipelineConfig& config = client.config();

  CrawlResult result;
  std::set<std::string> hosts;
  std::set<std::string> seen;
  std::set<std::string> images;
  std::vector<std::string> level;

  for (const auto& seed : seeds) {
    try {
      const Url url = client.check_target(seed);
      hosts.insert(url.host);
      if (seen.insert(url.to_string()).second) level.push_back(url.to_string());
    } catch (const FetchError& e) {
      result.errors.push_back({seed, e.kind(), e.what()});
    }
  }

  const int max_pages = config.crawl.max_pages;
  std::set<std::string> fetched;
  for (int depth = 0; !level.empty() && result.stats.pages_fetched < max_pages; ++depth) {
    std::vector<std::string> next_level;
    std::size_t cursor = 0;
    while (cursor < level.size() && result.stats.pages_fetched < max_pages) {
      const auto budget = static_cast<std::size_t>(max_pages - result.stats.pages_fetched);
      const auto take = std::min(budget, level.size() - cursor);
      std::vector<std::string> batch(level.begin() + static_cast<std::ptrdiff_t>(cursor),
                                     level.begin() + static_cast<std::ptrdiff_t>(cursor + take));
      cursor += take;

      std::vector<Outcome> outcomes;
      fetch_batch(batch, client, config.crawl.workers, outcomes);
      for (auto& outcome : outcomes) {
        if (outcome.error) {
          result.errors.push_back(std::move(*outcome.error));
          continue;
        }
        PageSnapshot& page = *outcome.page;
        // A redirect may land on a page that was already fetched.
        if (!fetched.insert(page.url).second) continue;
        seen.insert(page.url);
        result.stats.pages_fetched++;
        result.stats.bytes_downloaded += static_cast<std::int64_t>(page.html.size());
        for (const auto& img : page.image_refs) images.insert(img);
        if (depth < config.crawl.max_depth) {
          for (const auto& link : page.out_links) {
            auto url = parse_url(link);
            if (url && hosts.contains(url->host) && seen.insert(link).second) next_level.push_back(link);
          }
        }
        result.pages.push_back(std::move(page));
      }
    }
    level = std::move(next_level);
  }

  result.stats.images_discovered = static_cast<int>(images.size());
  if (result.pages.empty()) throw AllSeedsFailed(std::move(result.errors));
  return result;
}

}  // namespace onionlens::harvester
