#include "onionlens/service/job_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <boost/uuid/random_generator.hpp>
#include <boost/uuid/uuid_io.hpp>

#include "onionlens/fusion/report.hpp"

namespace onionlens::service {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::array<std::pair<JobState, std::string_view>, 5> kStates{{
    {JobState::queued, "queued"},
    {JobState::crawling, "crawling"},
    {JobState::classifying, "classifying"},
    {JobState::done, "done"},
    {JobState::failed, "failed"},
}};

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw JobStoreError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw JobStoreError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw JobStoreError("cannot rename " + tmp.string() + ": " + ec.message());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw JobStoreError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw JobStoreError(path.string() + ": " + e.what());
  }
}

std::string new_id() {
  thread_local boost::uuids::random_generator gen;
  return boost::uuids::to_string(gen());
}

}  // namespace

std::string_view to_string(JobState s) noexcept {
  for (const auto& [state, name] : kStates)
    if (state == s) return name;
  return "?";
}

std::optional<JobState> parse_job_state(std::string_view s) noexcept {
  for (const auto& [state, name] : kStates)
    if (name == s) return state;
  return std::nullopt;
}

bool is_terminal(JobState s) noexcept { return s == JobState::done || s == JobState::failed; }

bool can_transition(JobState from, JobState to) noexcept {
  if (is_terminal(from)) return false;
  if (to == JobState::failed) return true;
  return static_cast<int>(to) > static_cast<int>(from);
}

json to_json(const ScanJob& job, bool with_report) {
  json j{{"id", job.id},
         {"url", job.url},
         {"state", to_string(job.state)},
         {"submitted_at", job.submitted_at},
         {"finished_at", job.finished_at ? json(*job.finished_at) : json(nullptr)},
         {"error", job.error ? json(*job.error) : json(nullptr)}};
  if (with_report) j["report"] = job.report ? *job.report : json(nullptr);
  return j;
}

ScanJob job_from_json(const json& j) {
  try {
    ScanJob job;
    job.id = j.at("id").get<std::string>();
    job.url = j.at("url").get<std::string>();
    const auto state = parse_job_state(j.at("state").get<std::string>());
    if (!state) throw JobStoreError("job " + job.id + " has an unknown state");
    job.state = *state;
    job.submitted_at = j.at("submitted_at").get<std::string>();
    if (j.contains("finished_at") && !j["finished_at"].is_null()) job.finished_at = j["finished_at"].get<std::string>();
    if (j.contains("report") && !j["report"].is_null()) job.report = j["report"];
    if (j.contains("error") && !j["error"].is_null()) job.error = j["error"].get<std::string>();
    return job;
  } catch (const json::exception& e) {
    throw JobStoreError(std::string("malformed job record: ") + e.what());
  }
}

JobStore::JobStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "jobs", ec);
  if (ec) throw JobStoreError("cannot create job store " + dir_.string() + ": " + ec.message());

  std::vector<std::string> listed;
  if (fs::exists(dir_ / "index.json")) {
    const json index = read_json(dir_ / "index.json");
    if (!index.contains("jobs") || !index["jobs"].is_array())
      throw JobStoreError("index.json lacks a jobs array");
    for (const auto& id : index["jobs"]) listed.push_back(id.get<std::string>());
  }
  // A crash between the job write and the index write leaves an unlisted
  // job file behind; those are appended in submission order.
  std::vector<ScanJob> orphans;
  for (const auto& entry : fs::directory_iterator(dir_ / "jobs")) {
    if (entry.path().extension() != ".json") continue;
    ScanJob job = job_from_json(read_json(entry.path()));
    jobs_.emplace(job.id, std::move(job));
  }
  for (const auto& id : listed)
    if (jobs_.contains(id) && std::ranges::find(order_, id) == order_.end()) order_.push_back(id);
  for (const auto& [id, job] : jobs_)
    if (std::ranges::find(order_, id) == order_.end()) orphans.push_back(job);
  std::ranges::stable_sort(orphans, {}, &ScanJob::submitted_at);
  for (const auto& job : orphans) order_.push_back(job.id);
  if (!orphans.empty() || listed.size() != order_.size()) write_index();
}

void JobStore::write_job(const ScanJob& job) const {
  write_atomic(dir_ / "jobs" / (job.id + ".json"), to_json(job).dump(2));
}

void JobStore::write_index() const {
  write_atomic(dir_ / "index.json", json{{"version", 1}, {"jobs", order_}}.dump(2));
}

ScanJob JobStore::create(std::string url) {
  ScanJob job;
  job.id = new_id();
  job.url = std::move(url);
  job.submitted_at = fusion::utc_timestamp();
  std::lock_guard lock(mutex_);
  write_job(job);
  order_.push_back(job.id);
  jobs_.emplace(job.id, job);
  write_index();
  return job;
}

std::optional<ScanJob> JobStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::vector<ScanJob> JobStore::list(std::size_t offset, std::size_t limit) const {
  std::lock_guard lock(mutex_);
  std::vector<ScanJob> out;
  for (std::size_t i = offset; i < order_.size() && out.size() < limit; ++i) out.push_back(jobs_.at(order_[i]));
  return out;
}

std::size_t JobStore::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

ScanJob JobStore::transition(const std::string& id, JobState to, std::optional<json> report,
                             std::optional<std::string> error) {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw JobStoreError("unknown job " + id);
  ScanJob next = it->second;
  if (!can_transition(next.state, to))
    throw JobStoreError("job " + id + " cannot move from " + std::string(to_string(next.state)) + " to " +
                        std::string(to_string(to)));
  next.state = to;
  if (report) next.report = std::move(report);
  if (error) next.error = std::move(error);
  if (is_terminal(to)) next.finished_at = fusion::utc_timestamp();
  write_job(next);
  it->second = next;
  return next;
}

std::vector<std::string> JobStore::recover() {
  std::vector<std::string> queued;
  std::vector<std::string> interrupted;
  {
    std::lock_guard lock(mutex_);
    for (const auto& id : order_) {
      const JobState s = jobs_.at(id).state;
      if (s == JobState::queued) queued.push_back(id);
      else if (!is_terminal(s)) interrupted.push_back(id);
    }
  }
  for (const auto& id : interrupted) transition(id, JobState::failed, std::nullopt, "interrupted by service restart");
  return queued;
}

}  // namespace onionlens::service
