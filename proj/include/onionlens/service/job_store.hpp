#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "onionlens/error.hpp"

namespace onionlens::service {

enum class JobState { queued, crawling, classifying, done, failed };

std::string_view to_string(JobState s) noexcept;
std::optional<JobState> parse_job_state(std::string_view s) noexcept;
/// Forward moves only; failed is reachable from any non-terminal state.
bool can_transition(JobState from, JobState to) noexcept;
bool is_terminal(JobState s) noexcept;

struct ScanJob {
  std::string id;
  std::string url;
  JobState state = JobState::queued;
  std::string submitted_at;
  std::optional<std::string> finished_at;
  std::optional<nlohmann::json> report;  // set when done
  std::optional<std::string> error;      // set when failed
};

nlohmann::json to_json(const ScanJob& job, bool with_report = true);
ScanJob job_from_json(const nlohmann::json& j);

class JobStoreError : public Error {
 public:
  using Error::Error;
};

/// One JSON file per job under <dir>/jobs plus <dir>/index.json listing ids
/// in submission order. Every write goes to a temporary file that is then
/// renamed over the target.
class JobStore {
 public:
  /// Creates the directory if needed and loads existing jobs.
  explicit JobStore(std::filesystem::path dir);

  ScanJob create(std::string url);
  std::optional<ScanJob> get(const std::string& id) const;
  /// Submission order.
  std::vector<ScanJob> list(std::size_t offset, std::size_t limit) const;
  std::size_t size() const;

  /// Throws JobStoreError for unknown ids or backward moves.
  ScanJob transition(const std::string& id, JobState to, std::optional<nlohmann::json> report = std::nullopt,
                     std::optional<std::string> error = std::nullopt);

  /// After a restart: jobs interrupted mid-scan are marked failed; the ids
  /// of still-queued jobs are returned in submission order.
  std::vector<std::string> recover();

  const std::filesystem::path& directory() const noexcept { return dir_; }

 private:
  void write_job(const ScanJob& job) const;
  void write_index() const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::vector<std::string> order_;
  std::map<std::string, ScanJob> jobs_;
};

}  // namespace onionlens::service
