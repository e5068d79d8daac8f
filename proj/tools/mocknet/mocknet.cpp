#include "mocknet.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <httplib.h>

namespace onionlens::mocknet {
namespace {

namespace fs = std::filesystem;

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string strip_port(const std::string& host) {
  if (auto colon = host.rfind(':'); colon != std::string::npos && host.find(']') == std::string::npos)
    return host.substr(0, colon);
  return host;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Reads exactly n bytes, giving up after `timeout_ms` of silence.
bool read_exact(int fd, std::uint8_t* buf, std::size_t n, int timeout_ms = 5000) {
  std::size_t got = 0;
  while (got < n) {
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, timeout_ms) <= 0) return false;
    const ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

bool write_all(int fd, const std::uint8_t* buf, std::size_t n) {
  std::size_t sent = 0;
  while (sent < n) {
    const ssize_t w = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
    if (w <= 0) return false;
    sent += static_cast<std::size_t>(w);
  }
  return true;
}

int connect_local(int port, int& local_port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return -1;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    return -1;
  }
  sockaddr_in local{};
  socklen_t len = sizeof local;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&local), &len);
  local_port = ntohs(local.sin_port);
  return fd;
}

}  // namespace

std::string content_type_for(const fs::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".txt") return "text/plain; charset=utf-8";
  return "application/octet-stream";
}

MockWebServer::MockWebServer() : server_(std::make_unique<httplib::Server>()) {
  server_->Get(R"(.*)", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ < 0) throw std::runtime_error("mock web server cannot bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockWebServer::~MockWebServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void MockWebServer::add_site(const std::string& host, fs::path root) {
  std::lock_guard lock(mutex_);
  sites_[lower(host)] = std::move(root);
}

void MockWebServer::add_route(const std::string& host, const std::string& path, Handler handler) {
  std::lock_guard lock(mutex_);
  routes_[{lower(host), path}] = std::move(handler);
}

std::vector<RequestLog> MockWebServer::requests() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::vector<RequestLog> MockWebServer::requests_for(const std::string& host) const {
  std::vector<RequestLog> out;
  for (auto& r : requests())
    if (r.host == lower(host)) out.push_back(r);
  return out;
}

void MockWebServer::clear_log() {
  std::lock_guard lock(mutex_);
  log_.clear();
}

void MockWebServer::handle(const httplib::Request& req, httplib::Response& res) {
  const auto received = Clock::now();
  const std::string host = lower(strip_port(req.get_header_value("Host")));
  Handler handler;
  fs::path root;
  {
    std::lock_guard lock(mutex_);
    log_.push_back({host, req.path, received, req.remote_port});
    if (auto it = routes_.find({host, req.path}); it != routes_.end()) handler = it->second;
    if (auto it = sites_.find(host); it != sites_.end()) root = it->second;
  }
  if (handler) return handler(req, res);

  std::string rel = req.path;
  if (rel.empty() || rel.back() == '/') rel += "index.html";
  if (root.empty() || rel.find("..") != std::string::npos) {
    res.status = 404;
    res.set_content("not found", "text/plain");
    return;
  }
  const fs::path file = root / rel.substr(1);
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    res.status = 404;
    res.set_content("not found", "text/plain");
    return;
  }
  std::ostringstream body;
  body << in.rdbuf();
  res.set_content(body.str(), content_type_for(file));
}

MockSocksProxy::MockSocksProxy() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0)
    throw std::runtime_error("mock proxy cannot bind");
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

MockSocksProxy::~MockSocksProxy() { stop(); }

void MockSocksProxy::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  ::close(listen_fd_);
}

void MockSocksProxy::route(const std::string& host, int local_port) {
  std::lock_guard lock(mutex_);
  routes_[lower(host)] = local_port;
}

void MockSocksProxy::route_onions_to(int local_port) {
  std::lock_guard lock(mutex_);
  onion_port_ = local_port;
}

void MockSocksProxy::refuse(const std::string& host) {
  std::lock_guard lock(mutex_);
  refused_.insert(lower(host));
}

std::vector<ProxyConnection> MockSocksProxy::connections() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::set<int> MockSocksProxy::upstream_ports() const {
  std::set<int> out;
  for (const auto& c : connections())
    if (c.relayed) out.insert(c.upstream_local_port);
  return out;
}

void MockSocksProxy::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(mutex_);
    workers_.emplace_back([this, fd] {
      serve(fd);
      ::close(fd);
    });
  }
}

void MockSocksProxy::serve(int fd) {
  std::array<std::uint8_t, 262> buf{};
  // Greeting: VER NMETHODS METHODS...
  if (!read_exact(fd, buf.data(), 2) || buf[0] != 5) return;
  if (!read_exact(fd, buf.data(), buf[1])) return;
  const std::uint8_t choice[2] = {5, 0};
  if (!write_all(fd, choice, 2)) return;

  // Request: VER CMD RSV ATYP DST.ADDR DST.PORT
  if (!read_exact(fd, buf.data(), 4) || buf[0] != 5) return;
  const std::uint8_t cmd = buf[1];
  ProxyConnection conn;
  conn.address_type = buf[3];
  conn.at = Clock::now();
  if (conn.address_type == 1) {
    if (!read_exact(fd, buf.data(), 4)) return;
    char text[INET_ADDRSTRLEN];
    ::inet_ntop(AF_INET, buf.data(), text, sizeof text);
    conn.host = text;
  } else if (conn.address_type == 3) {
    if (!read_exact(fd, buf.data(), 1)) return;
    const std::size_t n = buf[0];
    if (!read_exact(fd, buf.data(), n)) return;
    conn.host = lower(std::string(reinterpret_cast<char*>(buf.data()), n));
  } else if (conn.address_type == 4) {
    if (!read_exact(fd, buf.data(), 16)) return;
    conn.host = "ipv6";
  } else {
    return;
  }
  if (!read_exact(fd, buf.data(), 2)) return;
  conn.port = (buf[0] << 8) | buf[1];

  int target = 0;
  {
    std::lock_guard lock(mutex_);
    if (!refused_.contains(conn.host)) {
      if (auto it = routes_.find(conn.host); it != routes_.end()) target = it->second;
      else if (onion_port_ && ends_with(conn.host, ".onion")) target = onion_port_;
    }
  }
  int upstream = -1;
  if (cmd == 1 && target) upstream = connect_local(target, conn.upstream_local_port);
  conn.relayed = upstream >= 0;
  {
    std::lock_guard lock(mutex_);
    log_.push_back(conn);
  }
  std::uint8_t reply[10] = {5, 0, 0, 1, 0, 0, 0, 0, 0, 0};
  if (cmd != 1) reply[1] = 7;              // command not supported
  else if (!conn.relayed) reply[1] = 4;    // host unreachable
  if (!write_all(fd, reply, sizeof reply) || !conn.relayed) {
    if (upstream >= 0) ::close(upstream);
    return;
  }

  std::array<std::uint8_t, 16384> chunk{};
  pollfd fds[2] = {{fd, POLLIN, 0}, {upstream, POLLIN, 0}};
  while (!stopping_) {
    const int ready = ::poll(fds, 2, 50);
    if (ready < 0) break;
    if (ready == 0) continue;
    bool closed = false;
    for (int i = 0; i < 2 && !closed; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t n = ::recv(fds[i].fd, chunk.data(), chunk.size(), 0);
      if (n <= 0 || !write_all(fds[1 - i].fd, chunk.data(), static_cast<std::size_t>(n))) closed = true;
    }
    if (closed) break;
  }
  ::close(upstream);
}

std::size_t MockOnionNet::direct_requests() const {
  const auto ports = proxy_.upstream_ports();
  std::size_t direct = 0;
  for (const auto& r : web_.requests())
    if (!ports.contains(r.remote_port)) ++direct;
  return direct;
}

}  // namespace onionlens::mocknet
