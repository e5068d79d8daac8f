#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "onionlens/curation/image.hpp"
#include "onionlens/domain/config.hpp"
#include "onionlens/error.hpp"
#include "onionlens/harvester/url.hpp"

namespace onionlens::harvester {

enum class FetchErrorKind {
  invalid_url,
  non_onion_host,
  proxy_unreachable,
  proxy_failure,  // the proxy answered but could not reach the target
  timeout,
  http_error,
  too_large,
  network,
  too_many_redirects,
};

std::string_view to_string(FetchErrorKind kind) noexcept;

class FetchError : public Error {
 public:
  FetchError(FetchErrorKind kind, std::string url, const std::string& detail, int status = 0);

  FetchErrorKind kind() const noexcept { return kind_; }
  const std::string& url() const noexcept { return url_; }
  int status() const noexcept { return status_; }

 private:
  FetchErrorKind kind_;
  std::string url_;
  int status_;
};

struct ProxyEndpoint {
  std::string host;
  int port = 0;
};

/// Accepts socks5h:// and socks5:// (both send the hostname to the proxy).
ProxyEndpoint parse_proxy_url(std::string_view proxy_url);

struct HttpResponse {
  Url url;  // final URL after redirects
  int status = 0;
  std::map<std::string, std::string> headers;  // lowercase names
  std::string body;

  std::string header(std::string_view name) const;
};

/// Serializes requests per host: the next request to a host starts no
/// earlier than `delay` after the previous one to that host finished.
class HostRateLimiter {
 public:
  explicit HostRateLimiter(std::chrono::milliseconds delay) : delay_(delay) {}

  class Slot {
   public:
    Slot(HostRateLimiter* owner, std::string host) : owner_(owner), host_(std::move(host)) {}
    Slot(Slot&& other) noexcept : owner_(std::exchange(other.owner_, nullptr)), host_(std::move(other.host_)) {}
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;
    Slot& operator=(Slot&&) = delete;
    ~Slot();

   private:
    HostRateLimiter* owner_;
    std::string host_;
  };

  /// Blocks until the host is idle and its politeness delay has elapsed.
  Slot acquire(const std::string& host);

 private:
  struct HostState;
  void release(const std::string& host);

  std::chrono::milliseconds delay_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::map<std::string, std::shared_ptr<HostState>> hosts_;
};

/// HTTP/1.1 GET over a SOCKS5 tunnel with remote name resolution. Every
/// connection this class opens goes to the proxy; target names are never
/// resolved locally.
class HttpClient {
 public:
  explicit HttpClient(PipelineConfig config, HostRateLimiter* limiter = nullptr);

  /// Retries timeouts and transport failures `retries` times in total with
  /// exponential backoff; follows up to 5 redirects. Throws FetchError.
  HttpResponse get(std::string_view url, std::int64_t max_bytes) const;

  /// Validates scheme and the onion-only policy without touching the network.
  Url check_target(std::string_view url) const;

  const PipelineConfig& config() const noexcept { return config_; }

 private:
  HttpResponse get_once(const Url& url, std::int64_t max_bytes) const;
  HttpResponse get_with_retries(const Url& url, std::int64_t max_bytes) const;

  PipelineConfig config_;
  ProxyEndpoint proxy_;
  HostRateLimiter* limiter_;
};

struct PageSnapshot {
  std::string url;
  std::chrono::system_clock::time_point fetched_at;
  int status = 0;
  std::string html;
  std::string text;
  std::vector<std::string> image_refs;
  std::vector<std::string> out_links;
};

/// Builds a snapshot from an already-fetched body (no network).
PageSnapshot make_snapshot(const Url& url, int status, std::string html);

PageSnapshot fetch_page(std::string_view url, const PipelineConfig& config);
PageSnapshot fetch_page(std::string_view url, const HttpClient& client);

curation::ImageRecord download_image(std::string_view url, const PipelineConfig& config);
curation::ImageRecord download_image(std::string_view url, const HttpClient& client);

}  // namespace onionlens::harvester
