#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "onionlens/fusion/fusion.hpp"
#include "onionlens/keywords/keywords.hpp"

namespace onionlens::fusion {

inline constexpr int kReportSchemaVersion = 1;

struct ImageResult {
  std::string source_url;
  std::uint64_t dhash = 0;
  infer::Classification classification;
};

struct ScanStats {
  int pages_fetched = 0;
  int images_discovered = 0;
  int images_downloaded = 0;
  int images_unusable = 0;
  int images_duplicate = 0;
  int images_classified = 0;
  int keywords = 0;
  std::int64_t bytes_downloaded = 0;
  int fetch_errors = 0;
};

struct ReportError {
  std::string url;
  std::string kind;
  std::string message;
};

struct Versions {
  std::string onionlens;
  std::int64_t model_total_params = 0;
  std::optional<std::int64_t> model_trainable_params;
  std::size_t embedding_dimension = 0;
};

/// Everything one scan concluded about one URL. The two recommendations are
/// always carried verbatim next to the fused activity.
struct ActivityReport {
  std::string url;
  Activity activity;
  TitleVote nlp;
  std::vector<keywords::Keyword> keywords;
  TitleVote classification;
  std::vector<ImageResult> images;
  ScanStats stats;
  std::vector<ReportError> errors;
  Versions versions;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;
};

/// Fields: url, activity, activity_title, activity_confidence,
/// activity_source, nlp_title, classification_title, images, stats, errors,
/// versions, timestamps.
nlohmann::json to_json(const ActivityReport& report);

/// Copy without the fields that legitimately differ between two runs
/// (timestamps, job ids).
nlohmann::json strip_volatile(const nlohmann::json& report);

/// Structural equality with a relative/absolute tolerance on numbers.
/// `where` receives the first differing JSON pointer.
bool json_close(const nlohmann::json& a, const nlohmann::json& b, double tol, std::string* where = nullptr);

std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now());

}  // namespace onionlens::fusion
