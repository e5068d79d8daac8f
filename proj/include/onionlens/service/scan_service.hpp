#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "onionlens/domain/config.hpp"
#include "onionlens/service/artifacts.hpp"
#include "onionlens/service/job_store.hpp"

namespace onionlens::service {

/// Runs queued scans on a fixed pool of workers. Jobs submitted before the
/// artifacts are ready wait in the queue.
class ScanService {
 public:
  ScanService(PipelineConfig config, JobStore& store);
  ~ScanService();
  ScanService(const ScanService&) = delete;
  ScanService& operator=(const ScanService&) = delete;

  void set_artifacts(std::shared_ptr<const Artifacts> artifacts);
  std::shared_ptr<const Artifacts> artifacts() const;
  bool ready() const;

  /// Requeues jobs left over from a previous run, then starts the workers.
  void start();
  void stop();

  /// Validates the URL (throws harvester::FetchError) and queues a job.
  ScanJob submit(const std::string& url);

  /// True once the queue is empty and no scan is running.
  bool wait_idle(std::chrono::milliseconds timeout);

  const PipelineConfig& config() const noexcept { return config_; }

 private:
  void worker();
  void run_job(const std::string& id, const Artifacts& artifacts);

  PipelineConfig config_;
  JobStore& store_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  std::shared_ptr<const Artifacts> artifacts_;
  int running_ = 0;
  bool stopping_ = false;
  std::vector<std::jthread> workers_;
};

}  // namespace onionlens::service
