#pragma once

// Blocking TCP/TLS byte streams with per-call deadlines. Internal to the
// harvester.

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <openssl/ssl.h>

namespace onionlens::harvester::detail {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

struct TimeoutExpired {};
struct TransportFailure {
  std::string what;
};

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  int fd() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }

  /// Throws TransportFailure if the host cannot be resolved or connected,
  /// TimeoutExpired past the deadline.
  static Socket connect_tcp(const std::string& host, int port, Deadline deadline);

  void arm(Deadline deadline) const;  // sets SO_RCVTIMEO/SO_SNDTIMEO to what remains

 private:
  int fd_ = -1;
};

class Stream {
 public:
  virtual ~Stream() = default;
  virtual void write_all(std::string_view data, Deadline deadline) = 0;
  /// Returns 0 on orderly EOF.
  virtual std::size_t read_some(char* buf, std::size_t len, Deadline deadline) = 0;
};

class PlainStream final : public Stream {
 public:
  explicit PlainStream(Socket socket) : socket_(std::move(socket)) {}
  void write_all(std::string_view data, Deadline deadline) override;
  std::size_t read_some(char* buf, std::size_t len, Deadline deadline) override;
  Socket& socket() { return socket_; }

 private:
  Socket socket_;
};

class TlsStream final : public Stream {
 public:
  /// Performs the handshake; peer verification is off (onion addresses
  /// authenticate the service key themselves).
  TlsStream(Socket socket, const std::string& server_name, Deadline deadline);
  ~TlsStream() override;
  TlsStream(const TlsStream&) = delete;
  TlsStream& operator=(const TlsStream&) = delete;

  void write_all(std::string_view data, Deadline deadline) override;
  std::size_t read_some(char* buf, std::size_t len, Deadline deadline) override;

 private:
  Socket socket_;
  SSL* ssl_ = nullptr;
};

/// SOCKS5 CONNECT with ATYP=domain so the proxy performs name resolution.
/// Returns the reply code (0 = success).
int socks5_connect(PlainStream& proxy, const std::string& host, int port, Deadline deadline);

std::string_view socks5_reply_text(int code) noexcept;

}  // namespace onionlens::harvester::detail
