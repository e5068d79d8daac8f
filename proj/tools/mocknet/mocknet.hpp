#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
struct Request;
struct Response;
}  // namespace httplib

namespace onionlens::mocknet {

using Clock = std::chrono::steady_clock;

struct RequestLog {
  std::string host;  // Host header without port, lowercase
  std::string path;
  Clock::time_point received;
  int remote_port = 0;
};

/// Plain HTTP server on 127.0.0.1 that routes by Host header to a directory
/// per site or to custom handlers, and logs every request.
class MockWebServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  MockWebServer();
  ~MockWebServer();
  MockWebServer(const MockWebServer&) = delete;
  MockWebServer& operator=(const MockWebServer&) = delete;

  int port() const noexcept { return port_; }
  void add_site(const std::string& host, std::filesystem::path root);
  /// Exact-path handler, checked before site files.
  void add_route(const std::string& host, const std::string& path, Handler handler);

  std::vector<RequestLog> requests() const;
  std::vector<RequestLog> requests_for(const std::string& host) const;
  void clear_log();

 private:
  void handle(const httplib::Request& req, httplib::Response& res);

  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
  mutable std::mutex mutex_;
  std::map<std::string, std::filesystem::path> sites_;
  std::map<std::pair<std::string, std::string>, Handler> routes_;
  std::vector<RequestLog> log_;
};

struct ProxyConnection {
  std::string host;
  int port = 0;
  std::uint8_t address_type = 0;  // 1 IPv4, 3 domain name, 4 IPv6
  bool relayed = false;
  int upstream_local_port = 0;    // source port of the proxy's upstream socket
  Clock::time_point at;
};

/// SOCKS5 (no auth, CONNECT only) that relays routed names to local ports
/// and answers "host unreachable" for everything else. Records every
/// CONNECT it sees.
class MockSocksProxy {
 public:
  MockSocksProxy();
  ~MockSocksProxy();
  MockSocksProxy(const MockSocksProxy&) = delete;
  MockSocksProxy& operator=(const MockSocksProxy&) = delete;

  int port() const noexcept { return port_; }
  std::string url() const { return "socks5h://127.0.0.1:" + std::to_string(port_); }

  void route(const std::string& host, int local_port);
  /// Every *.onion name not explicitly refused goes to local_port.
  void route_onions_to(int local_port);
  void refuse(const std::string& host);

  std::vector<ProxyConnection> connections() const;
  std::set<int> upstream_ports() const;
  void stop();

 private:
  void accept_loop();
  void serve(int fd);

  int listen_fd_ = -1;
  int port_ = -1;
  std::atomic<bool> stopping_{false};
  mutable std::mutex mutex_;
  std::map<std::string, int> routes_;
  std::set<std::string> refused_;
  int onion_port_ = 0;
  std::vector<ProxyConnection> log_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
};

/// A web server reachable only through a recording proxy.
class MockOnionNet {
 public:
  MockOnionNet() { proxy_.route_onions_to(web_.port()); }

  MockWebServer& web() noexcept { return web_; }
  MockSocksProxy& proxy() noexcept { return proxy_; }
  std::string proxy_url() const { return proxy_.url(); }

  /// Requests that reached the web server without passing through the proxy.
  std::size_t direct_requests() const;

 private:
  MockWebServer web_;
  MockSocksProxy proxy_;
};

/// Content type guessed from a file extension.
std::string content_type_for(const std::filesystem::path& path);

}  // namespace onionlens::mocknet
