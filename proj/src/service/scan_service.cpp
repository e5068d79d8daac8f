#include "onionlens/service/scan_service.hpp"

#include <iostream>

#include "onionlens/harvester/crawler.hpp"
#include "onionlens/service/pipeline.hpp"

namespace onionlens::service {

ScanService::ScanService(PipelineConfig config, JobStore& store) : config_(std::move(config)), store_(store) {}

ScanService::~ScanService() { stop(); }

void ScanService::set_artifacts(std::shared_ptr<const Artifacts> artifacts) {
  {
    std::lock_guard lock(mutex_);
    artifacts_ = std::move(artifacts);
  }
  cv_.notify_all();
}

std::shared_ptr<const Artifacts> ScanService::artifacts() const {
  std::lock_guard lock(mutex_);
  return artifacts_;
}

bool ScanService::ready() const { return artifacts() != nullptr; }

void ScanService::start() {
  const auto pending = store_.recover();
  std::lock_guard lock(mutex_);
  if (!workers_.empty()) return;
  stopping_ = false;
  for (const auto& id : pending) queue_.push_back(id);
  for (int i = 0; i < std::max(1, config_.service.scan_workers); ++i) workers_.emplace_back([this] { worker(); });
}

void ScanService::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  workers_.clear();  // joins
}

ScanJob ScanService::submit(const std::string& url) {
  const auto normalized = validate_scan_url(url, config_).to_string();
  ScanJob job = store_.create(normalized);
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(job.id);
  }
  cv_.notify_one();
  return job;
}

bool ScanService::wait_idle(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return idle_cv_.wait_for(lock, timeout, [this] { return queue_.empty() && running_ == 0; });
}

void ScanService::worker() {
  for (;;) {
    std::string id;
    std::shared_ptr<const Artifacts> artifacts;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [this] { return stopping_ || (!queue_.empty() && artifacts_); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      artifacts = artifacts_;
      ++running_;
    }
    run_job(id, *artifacts);
    {
      std::lock_guard lock(mutex_);
      --running_;
    }
    idle_cv_.notify_all();
  }
}

void ScanService::run_job(const std::string& id, const Artifacts& artifacts) {
  try {
    const auto job = store_.get(id);
    if (!job || job->state != JobState::queued) return;
    const auto report = run_scan(job->url, config_, artifacts, [&](ScanPhase phase) {
      store_.transition(id, phase == ScanPhase::crawling ? JobState::crawling : JobState::classifying);
    });
    store_.transition(id, JobState::done, fusion::to_json(report));
  } catch (const std::exception& e) {
    try {
      store_.transition(id, JobState::failed, std::nullopt, e.what());
    } catch (const std::exception& inner) {
      std::cerr << "onionlens: cannot record failure of job " << id << ": " << inner.what() << "\n";
    }
  }
}

}  // namespace onionlens::service
