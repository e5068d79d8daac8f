#pragma once

#include <memory>
#include <string>

#include "onionlens/service/job_store.hpp"
#include "onionlens/service/scan_service.hpp"

namespace httplib {
class Server;
}

namespace onionlens::service {

inline constexpr std::size_t kDefaultPageSize = 20;
inline constexpr std::size_t kMaxPageSize = 100;

/// JSON API over the scan service:
///   POST /api/v1/scans {url}   -> 202 {id, state, url}
///   GET  /api/v1/scans/{id}    -> job (with report when done)
///   GET  /api/v1/scans         -> {total, offset, limit, items}
///   GET  /api/v1/health        -> model parameter counts; 503 while loading
class ApiServer {
 public:
  ApiServer(ScanService& service, JobStore& store);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds; port 0 picks a free one. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  void stop();
  bool running() const;

 private:
  void routes();

  ScanService& service_;
  JobStore& store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace onionlens::service
