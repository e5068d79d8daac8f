#include "onionlens/service/pipeline.hpp"

#include <atomic>
#include <set>
#include <thread>

#include "onionlens/curation/decode.hpp"
#include "onionlens/curation/dedupe.hpp"
#include "onionlens/harvester/crawler.hpp"
#include "onionlens/infer/classify.hpp"
#include "onionlens/version.hpp"

namespace onionlens::service {
namespace {

constexpr std::size_t kClassifyBatch = 16;

struct Download {
  std::optional<curation::ImageRecord> record;
  std::optional<fusion::ReportError> error;
};

std::vector<Download> download_all(const std::vector<std::string>& urls, const harvester::HttpClient& client,
                                   int workers, int min_side) {
  std::vector<Download> out(urls.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < urls.size(); i = next++) {
      try {
        auto rec = harvester::download_image(urls[i], client);
        curation::curate(rec, min_side);
        out[i].record = std::move(rec);
      } catch (const harvester::FetchError& e) {
        out[i].error = fusion::ReportError{urls[i], std::string(harvester::to_string(e.kind())), e.what()};
      }
    }
  };
  const auto width = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), urls.size());
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < width; ++w) pool.emplace_back(work);
  work();
  return out;
}

}  // namespace

harvester::Url validate_scan_url(std::string_view url, const PipelineConfig& config) {
  return harvester::HttpClient(config).check_target(url);
}

fusion::ActivityReport run_scan(std::string_view url, const PipelineConfig& config, const Artifacts& artifacts,
                                const ProgressFn& progress) {
  fusion::ActivityReport report;
  report.started_at = fusion::utc_timestamp();
  const harvester::Url target = validate_scan_url(url, config);
  report.url = target.to_string();

  harvester::HostRateLimiter limiter(std::chrono::milliseconds(config.crawl.per_host_delay_ms));
  const harvester::HttpClient client(config, &limiter);

  if (progress) progress(ScanPhase::crawling);
  harvester::CrawlResult crawl = harvester::crawl({report.url}, client);
  report.stats.pages_fetched = crawl.stats.pages_fetched;
  report.stats.images_discovered = crawl.stats.images_discovered;
  report.stats.bytes_downloaded = crawl.stats.bytes_downloaded;
  for (const auto& e : crawl.errors)
    report.errors.push_back({e.url, std::string(harvester::to_string(e.kind)), e.message});

  std::vector<std::string> image_urls;
  std::set<std::string> seen;
  const auto cap = static_cast<std::size_t>(config.crawl.max_images_per_scan);
  for (const auto& page : crawl.pages)
    for (const auto& ref : page.image_refs)
      if (image_urls.size() < cap && seen.insert(ref).second) image_urls.push_back(ref);

  if (progress) progress(ScanPhase::classifying);
  std::vector<curation::ImageRecord> decoded;
  for (auto& d : download_all(image_urls, client, config.crawl.workers, config.min_side)) {
    if (d.error) {
      report.errors.push_back(std::move(*d.error));
      continue;
    }
    report.stats.images_downloaded++;
    report.stats.bytes_downloaded += static_cast<std::int64_t>(d.record->bytes.size());
    if (d.record->decoded()) decoded.push_back(std::move(*d.record));
    else report.stats.images_unusable++;
  }
  report.stats.fetch_errors = static_cast<int>(report.errors.size());

  auto deduped = curation::dedupe(std::move(decoded), config.dedup_threshold);
  report.stats.images_duplicate = static_cast<int>(deduped.dropped.size());

  std::vector<infer::Classification> classifications;
  const auto& kept = deduped.kept;
  for (std::size_t start = 0; start < kept.size(); start += kClassifyBatch) {
    std::vector<const curation::DecodedImage*> batch;
    for (std::size_t i = start; i < std::min(kept.size(), start + kClassifyBatch); ++i)
      batch.push_back(&*kept[i].image);
    for (auto& c : infer::classify_batch(artifacts.model, batch)) classifications.push_back(c);
  }
  for (std::size_t i = 0; i < kept.size(); ++i)
    report.images.push_back({kept[i].source_url, *kept[i].dhash, classifications[i]});
  report.stats.images_classified = static_cast<int>(classifications.size());

  std::string text;
  for (const auto& page : crawl.pages) {
    if (!text.empty()) text += '\n';
    text += page.text;
  }
  const keywords::KeywordResources res{&artifacts.embeddings, &artifacts.prototypes, &artifacts.stopwords};
  auto analysis = keywords::analyze_text(text, res, config.keywords);
  report.keywords = std::move(analysis.keywords);
  report.stats.keywords = static_cast<int>(report.keywords.size());
  report.nlp.category = analysis.title.category;
  report.nlp.confidence = analysis.title.confidence;
  report.nlp.votes = analysis.title.votes;

  report.classification = fusion::classification_title(classifications);
  report.activity = fusion::fuse(report.classification, report.nlp);

  report.versions.onionlens = onionlens::version();
  report.versions.model_total_params = artifacts.model.parameter_count();
  if (const auto& meta = artifacts.model.metadata()) report.versions.model_trainable_params = meta->trainable_params;
  report.versions.embedding_dimension = artifacts.embeddings.dimension();
  report.finished_at = fusion::utc_timestamp();
  return report;
}

}  // namespace onionlens::service
