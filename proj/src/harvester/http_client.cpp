#include <algorithm>
#include <cctype>
#include <charconv>
#include <thread>

#include "onionlens/harvester/fetch.hpp"
#include "onionlens/harvester/html.hpp"
#include "transport.hpp"

namespace onionlens::harvester {
namespace {

using detail::Clock;
using detail::Deadline;

constexpr int kMaxRedirects = 5;
constexpr std::size_t kMaxHeaderBytes = 64 * 1024;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Buffered reader over a Stream that enforces a body byte cap.
class Reader {
 public:
  Reader(detail::Stream& stream, Deadline deadline) : stream_(stream), deadline_(deadline) {}

  // False on EOF before any byte.
  bool fill() {
    if (pos_ < buf_.size()) return true;
    buf_.resize(16 * 1024);
    const auto n = stream_.read_some(buf_.data(), buf_.size(), deadline_);
    buf_.resize(n);
    pos_ = 0;
    return n > 0;
  }

  std::string read_line(std::size_t limit) {
    std::string line;
    for (;;) {
      if (!fill()) throw detail::TransportFailure{"connection closed mid-header"};
      const auto nl = std::find(buf_.begin() + static_cast<std::ptrdiff_t>(pos_), buf_.end(), '\n');
      const auto take = static_cast<std::size_t>(nl - (buf_.begin() + static_cast<std::ptrdiff_t>(pos_)));
      line.append(buf_, pos_, take);
      pos_ += take;
      if (line.size() > limit) throw detail::TransportFailure{"response header too large"};
      if (nl != buf_.end()) {
        ++pos_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
    }
  }

  // Appends up to n bytes; returns how many were appended (0 on EOF).
  std::size_t read_into(std::string& out, std::size_t n) {
    if (!fill()) return 0;
    const auto take = std::min(n, buf_.size() - pos_);
    out.append(buf_, pos_, take);
    pos_ += take;
    return take;
  }

 private:
  detail::Stream& stream_;
  Deadline deadline_;
  std::string buf_;
  std::size_t pos_ = 0;
};

[[noreturn]] void too_large(const Url& url, std::int64_t cap) {
  throw FetchError(FetchErrorKind::too_large, url.to_string(),
                   "body exceeds " + std::to_string(cap) + " bytes");
}

void read_body(Reader& reader, HttpResponse& response, std::int64_t cap) {
  const auto cap_bytes = static_cast<std::size_t>(cap);
  const std::string te = lower(response.header("transfer-encoding"));
  if (te.find("chunked") != std::string::npos) {
    for (;;) {
      const std::string size_line = reader.read_line(1024);
      std::size_t chunk = 0;
      const auto digits = trim(std::string_view(size_line).substr(0, size_line.find(';')));
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), chunk, 16);
      if (ec != std::errc{} || digits.empty()) throw detail::TransportFailure{"bad chunk size"};
      if (chunk == 0) break;
      if (response.body.size() + chunk > cap_bytes) too_large(response.url, cap);
      std::size_t left = chunk;
      while (left > 0) {
        const auto n = reader.read_into(response.body, left);
        if (n == 0) throw detail::TransportFailure{"connection closed mid-chunk"};
        left -= n;
      }
      reader.read_line(2);  // CRLF after chunk data
    }
    return;
  }

  const std::string length = response.header("content-length");
  if (!length.empty()) {
    std::int64_t expected = 0;
    auto [ptr, ec] = std::from_chars(length.data(), length.data() + length.size(), expected);
    if (ec != std::errc{} || expected < 0) throw detail::TransportFailure{"bad content-length"};
    if (expected > cap) too_large(response.url, cap);
    auto left = static_cast<std::size_t>(expected);
    while (left > 0) {
      const auto n = reader.read_into(response.body, left);
      if (n == 0) throw detail::TransportFailure{"connection closed before content-length bytes"};
      left -= n;
    }
    return;
  }

  for (;;) {
    const auto n = reader.read_into(response.body, cap_bytes + 1 - response.body.size());
    if (n == 0) break;
    if (response.body.size() > cap_bytes) too_large(response.url, cap);
  }
}

bool is_redirect(int status) {
  return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

}  // namespace

std::string_view to_string(FetchErrorKind kind) noexcept {
  switch (kind) {
    case FetchErrorKind::invalid_url: return "invalid_url";
    case FetchErrorKind::non_onion_host: return "non_onion_host";
    case FetchErrorKind::proxy_unreachable: return "proxy_unreachable";
    case FetchErrorKind::proxy_failure: return "proxy_failure";
    case FetchErrorKind::timeout: return "timeout";
    case FetchErrorKind::http_error: return "http_error";
    case FetchErrorKind::too_large: return "too_large";
    case FetchErrorKind::network: return "network";
    case FetchErrorKind::too_many_redirects: return "too_many_redirects";
  }
  return "unknown";
}

FetchError::FetchError(FetchErrorKind kind, std::string url, const std::string& detail, int status)
    : Error(std::string(to_string(kind)) + ": " + url + ": " + detail),
      kind_(kind),
      url_(std::move(url)),
      status_(status) {}

ProxyEndpoint parse_proxy_url(std::string_view proxy_url) {
  std::string_view rest = proxy_url;
  for (std::string_view prefix : {"socks5h://", "socks5://"}) {
    if (lower(rest.substr(0, prefix.size())) == prefix) {
      rest.remove_prefix(prefix.size());
      break;
    }
  }
  if (rest.find("://") != std::string_view::npos) {
    throw FetchError(FetchErrorKind::proxy_unreachable, std::string(proxy_url),
                     "only socks5h:// proxies are supported");
  }
  while (!rest.empty() && rest.back() == '/') rest.remove_suffix(1);
  ProxyEndpoint ep;
  ep.port = 1080;
  const auto colon = rest.rfind(':');
  if (colon != std::string_view::npos) {
    auto digits = rest.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), ep.port);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || ep.port <= 0 || ep.port > 65535) {
      throw FetchError(FetchErrorKind::proxy_unreachable, std::string(proxy_url), "bad proxy port");
    }
    rest = rest.substr(0, colon);
  }
  if (rest.empty()) {
    throw FetchError(FetchErrorKind::proxy_unreachable, std::string(proxy_url), "missing proxy host");
  }
  ep.host = std::string(rest);
  return ep;
}

std::string HttpResponse::header(std::string_view name) const {
  auto it = headers.find(lower(name));
  return it == headers.end() ? std::string{} : it->second;
}

struct HostRateLimiter::HostState {
  bool busy = false;
  Clock::time_point next_start{};
};

HostRateLimiter::Slot HostRateLimiter::acquire(const std::string& host) {
  std::unique_lock lock(mutex_);
  auto& state = hosts_[host];
  if (!state) state = std::make_shared<HostState>();
  auto keep = state;
  for (;;) {
    if (keep->busy) {
      cv_.wait(lock);
      continue;
    }
    const auto now = Clock::now();
    if (now >= keep->next_start) break;
    cv_.wait_until(lock, keep->next_start);
  }
  keep->busy = true;
  return Slot(this, host);
}

void HostRateLimiter::release(const std::string& host) {
  {
    std::lock_guard lock(mutex_);
    auto& state = hosts_[host];
    state->busy = false;
    state->next_start = Clock::now() + delay_;
  }
  cv_.notify_all();
}

HostRateLimiter::Slot::~Slot() {
  if (owner_ != nullptr) owner_->release(host_);
}

HttpClient::HttpClient(PipelineConfig config, HostRateLimiter* limiter)
    : config_(std::move(config)), proxy_(parse_proxy_url(config_.proxy_url)), limiter_(limiter) {}

Url HttpClient::check_target(std::string_view url) const {
  auto parsed = parse_url(url);
  if (!parsed) {
    throw FetchError(FetchErrorKind::invalid_url, std::string(url), "not an absolute http(s) URL");
  }
  if (!parsed->is_onion() && !config_.allow_clearnet) {
    throw FetchError(FetchErrorKind::non_onion_host, parsed->to_string(),
                     "host is not a .onion address and clearnet hosts are disabled");
  }
  return *parsed;
}

HttpResponse HttpClient::get_once(const Url& url, std::int64_t max_bytes) const {
  const Deadline deadline = Clock::now() + std::chrono::milliseconds(config_.crawl.timeout_ms);
  std::optional<HostRateLimiter::Slot> slot;
  if (limiter_ != nullptr) slot.emplace(limiter_->acquire(url.host));
  const std::string where = url.to_string();

  try {
    detail::Socket sock;
    try {
      sock = detail::Socket::connect_tcp(proxy_.host, proxy_.port, deadline);
    } catch (const detail::TransportFailure& f) {
      throw FetchError(FetchErrorKind::proxy_unreachable, where, f.what);
    }
    detail::PlainStream tunnel(std::move(sock));
    int reply = 0;
    try {
      reply = detail::socks5_connect(tunnel, url.host, url.port, deadline);
    } catch (const detail::TransportFailure& f) {
      throw FetchError(FetchErrorKind::proxy_unreachable, where, f.what);
    }
    if (reply != 0) {
      throw FetchError(FetchErrorKind::proxy_failure, where, std::string(detail::socks5_reply_text(reply)));
    }

    std::unique_ptr<detail::Stream> stream;
    if (url.scheme == "https") {
      stream = std::make_unique<detail::TlsStream>(std::move(tunnel.socket()), url.host, deadline);
    } else {
      stream = std::make_unique<detail::PlainStream>(std::move(tunnel));
    }

    std::string request = "GET " + url.target() + " HTTP/1.1\r\n";
    request += "Host: " + url.authority() + "\r\n";
    request += "User-Agent: " + config_.user_agent + "\r\n";
    request += "Accept: */*\r\nAccept-Encoding: identity\r\nConnection: close\r\n\r\n";
    stream->write_all(request, deadline);

    Reader reader(*stream, deadline);
    HttpResponse response;
    response.url = url;
    std::string status_line;
    do {
      status_line = reader.read_line(kMaxHeaderBytes);
      response.headers.clear();
      if (!status_line.starts_with("HTTP/1.")) throw detail::TransportFailure{"not an HTTP response"};
      const auto sp = status_line.find(' ');
      std::string_view code = std::string_view(status_line).substr(sp + 1, 3);
      auto [ptr, ec] = std::from_chars(code.data(), code.data() + code.size(), response.status);
      if (ec != std::errc{}) throw detail::TransportFailure{"bad status line"};
      std::size_t header_bytes = 0;
      for (;;) {
        std::string line = reader.read_line(kMaxHeaderBytes);
        header_bytes += line.size();
        if (header_bytes > kMaxHeaderBytes) throw detail::TransportFailure{"headers too large"};
        if (line.empty()) break;
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        response.headers[lower(trim(std::string_view(line).substr(0, colon)))] =
            std::string(trim(std::string_view(line).substr(colon + 1)));
      }
    } while (response.status >= 100 && response.status < 200);

    if (!is_redirect(response.status) && response.status < 400) read_body(reader, response, max_bytes);
    return response;
  } catch (const detail::TimeoutExpired&) {
    throw FetchError(FetchErrorKind::timeout, where,
                     "no complete response within " + std::to_string(config_.crawl.timeout_ms) + " ms");
  } catch (const detail::TransportFailure& f) {
    throw FetchError(FetchErrorKind::network, where, f.what);
  }
}

HttpResponse HttpClient::get_with_retries(const Url& url, std::int64_t max_bytes) const {
  auto backoff = std::chrono::milliseconds(config_.crawl.backoff_ms);
  for (int attempt = 1;; ++attempt) {
    try {
      return get_once(url, max_bytes);
    } catch (const FetchError& e) {
      const bool transient = e.kind() == FetchErrorKind::timeout || e.kind() == FetchErrorKind::network ||
                             e.kind() == FetchErrorKind::proxy_failure;
      if (!transient || attempt >= config_.crawl.retries) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

HttpResponse HttpClient::get(std::string_view url, std::int64_t max_bytes) const {
  Url current = check_target(url);
  for (int hop = 0; hop <= kMaxRedirects; ++hop) {
    HttpResponse response = get_with_retries(current, max_bytes);
    if (is_redirect(response.status)) {
      const std::string location = response.header("location");
      auto next = resolve(current, location);
      if (location.empty() || !next) {
        throw FetchError(FetchErrorKind::http_error, current.to_string(), "redirect without usable Location",
                         response.status);
      }
      current = check_target(next->to_string());
      continue;
    }
    if (response.status >= 400) {
      throw FetchError(FetchErrorKind::http_error, current.to_string(),
                       "HTTP status " + std::to_string(response.status), response.status);
    }
    return response;
  }
  throw FetchError(FetchErrorKind::too_many_redirects, std::string(url),
                   "more than " + std::to_string(kMaxRedirects) + " redirects");
}

PageSnapshot make_snapshot(const Url& url, int status, std::string html) {
  PageSnapshot page;
  page.url = url.to_string();
  page.fetched_at = std::chrono::system_clock::now();
  page.status = status;
  HtmlDocument doc = parse_html(html);
  page.html = std::move(html);
  page.text = std::move(doc.text);

  Url base = url;
  if (doc.base_href) {
    if (auto b = resolve(url, *doc.base_href)) base = *b;
  }
  auto add_unique = [](std::vector<std::string>& list, std::string value) {
    if (std::find(list.begin(), list.end(), value) == list.end()) list.push_back(std::move(value));
  };
  for (const auto& src : doc.image_srcs) {
    if (auto abs = resolve(base, src)) add_unique(page.image_refs, abs->to_string());
  }
  for (const auto& href : doc.link_hrefs) {
    auto abs = resolve(base, href);
    if (abs && abs->host == url.host && abs->port == url.port) add_unique(page.out_links, abs->to_string());
  }
  return page;
}

PageSnapshot fetch_page(std::string_view url, const HttpClient& client) {
  HttpResponse response = client.get(url, client.config().crawl.max_page_bytes);
  return make_snapshot(response.url, response.status, std::move(response.body));
}

PageSnapshot fetch_page(std::string_view url, const PipelineConfig& config) {
  return fetch_page(url, HttpClient(config));
}

curation::ImageRecord download_image(std::string_view url, const HttpClient& client) {
  HttpResponse response = client.get(url, client.config().crawl.max_image_bytes);
  curation::ImageRecord record;
  record.source_url = normalize(url);
  record.content_type = response.header("content-type");
  record.bytes.assign(response.body.begin(), response.body.end());
  return record;
}

curation::ImageRecord download_image(std::string_view url, const PipelineConfig& config) {
  return download_image(url, HttpClient(config));
}

}  // namespace onionlens::harvester
