#include "transport.hpp"

#include <cerrno>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <openssl/err.h>

namespace onionlens::harvester::detail {
namespace {

int remaining_ms(Deadline deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  if (left.count() <= 0) throw TimeoutExpired{};
  return static_cast<int>(left.count());
}

bool connect_with_deadline(int fd, const sockaddr* addr, socklen_t len, Deadline deadline) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, addr, len);
  if (rc != 0 && errno != EINPROGRESS) return false;
  if (rc != 0) {
    pollfd pfd{fd, POLLOUT, 0};
    rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc == 0) throw TimeoutExpired{};
    if (rc < 0) return false;
    int err = 0;
    socklen_t err_len = sizeof(err);
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &err_len);
    if (err != 0) return false;
  }
  ::fcntl(fd, F_SETFL, flags);
  return true;
}

SSL_CTX* client_context() {
  static SSL_CTX* ctx = [] {
    SSL_CTX* c = SSL_CTX_new(TLS_client_method());
    SSL_CTX_set_verify(c, SSL_VERIFY_NONE, nullptr);
    SSL_CTX_set_min_proto_version(c, TLS1_2_VERSION);
    return c;
  }();
  return ctx;
}

std::string ssl_error_text() {
  const unsigned long code = ERR_get_error();
  if (code == 0) return "tls failure";
  char buf[256];
  ERR_error_string_n(code, buf, sizeof(buf));
  return buf;
}

}  // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket Socket::connect_tcp(const std::string& host, int port, Deadline deadline) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_NUMERICSERV;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result); rc != 0) {
    throw TransportFailure{"cannot resolve " + host + ": " + ::gai_strerror(rc)};
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(result, &::freeaddrinfo);

  std::string last_error = "no addresses";
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    Socket sock(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!sock) continue;
    if (connect_with_deadline(sock.fd(), ai->ai_addr, ai->ai_addrlen, deadline)) {
      const int one = 1;
      ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return sock;
    }
    last_error = std::strerror(errno);
  }
  throw TransportFailure{"cannot connect to " + host + ":" + service + ": " + last_error};
}

void Socket::arm(Deadline deadline) const {
  const int ms = remaining_ms(deadline);
  timeval tv{};
  tv.tv_sec = ms / 1000;
  tv.tv_usec = (ms % 1000) * 1000;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

void PlainStream::write_all(std::string_view data, Deadline deadline) {
  while (!data.empty()) {
    socket_.arm(deadline);
    const ssize_t n = ::send(socket_.fd(), data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw TimeoutExpired{};
      throw TransportFailure{std::string("send failed: ") + std::strerror(errno)};
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::size_t PlainStream::read_some(char* buf, std::size_t len, Deadline deadline) {
  for (;;) {
    socket_.arm(deadline);
    const ssize_t n = ::recv(socket_.fd(), buf, len, 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) throw TimeoutExpired{};
    throw TransportFailure{std::string("recv failed: ") + std::strerror(errno)};
  }
}

TlsStream::TlsStream(Socket socket, const std::string& server_name, Deadline deadline)
    : socket_(std::move(socket)), ssl_(SSL_new(client_context())) {
  if (ssl_ == nullptr) throw TransportFailure{ssl_error_text()};
  SSL_set_fd(ssl_, socket_.fd());
  SSL_set_tlsext_host_name(ssl_, server_name.c_str());
  socket_.arm(deadline);
  if (SSL_connect(ssl_) != 1) {
    if (Clock::now() >= deadline) throw TimeoutExpired{};
    throw TransportFailure{"tls handshake failed: " + ssl_error_text()};
  }
}

TlsStream::~TlsStream() {
  if (ssl_ != nullptr) {
    SSL_shutdown(ssl_);
    SSL_free(ssl_);
  }
}

void TlsStream::write_all(std::string_view data, Deadline deadline) {
  while (!data.empty()) {
    socket_.arm(deadline);
    const int n = SSL_write(ssl_, data.data(), static_cast<int>(data.size()));
    if (n <= 0) {
      if (Clock::now() >= deadline) throw TimeoutExpired{};
      throw TransportFailure{"tls write failed: " + ssl_error_text()};
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::size_t TlsStream::read_some(char* buf, std::size_t len, Deadline deadline) {
  socket_.arm(deadline);
  const int n = SSL_read(ssl_, buf, static_cast<int>(len));
  if (n > 0) return static_cast<std::size_t>(n);
  const int err = SSL_get_error(ssl_, n);
  if (err == SSL_ERROR_ZERO_RETURN) return 0;
  if (err == SSL_ERROR_SYSCALL && ERR_peek_error() == 0 && errno == 0) return 0;  // unclean close
  if (Clock::now() >= deadline || errno == EAGAIN || errno == EWOULDBLOCK) throw TimeoutExpired{};
  throw TransportFailure{"tls read failed: " + ssl_error_text()};
}

namespace {

void read_exact(PlainStream& s, std::uint8_t* out, std::size_t n, Deadline deadline) {
  std::size_t got = 0;
  while (got < n) {
    const auto r = s.read_some(reinterpret_cast<char*>(out) + got, n - got, deadline);
    if (r == 0) throw TransportFailure{"proxy closed the connection during handshake"};
    got += r;
  }
}

}  // namespace

int socks5_connect(PlainStream& proxy, const std::string& host, int port, Deadline deadline) {
  if (host.size() > 255) throw TransportFailure{"hostname too long for SOCKS5"};

  const char greeting[] = {0x05, 0x01, 0x00};
  proxy.write_all(std::string_view(greeting, sizeof(greeting)), deadline);
  std::uint8_t choice[2];
  read_exact(proxy, choice, 2, deadline);
  if (choice[0] != 0x05 || choice[1] != 0x00) {
    throw TransportFailure{"proxy refused SOCKS5 no-auth negotiation"};
  }

  std::string request = {0x05, 0x01, 0x00, 0x03};
  request.push_back(static_cast<char>(host.size()));
  request += host;
  request.push_back(static_cast<char>((port >> 8) & 0xFF));
  request.push_back(static_cast<char>(port & 0xFF));
  proxy.write_all(request, deadline);

  std::uint8_t head[4];
  read_exact(proxy, head, 4, deadline);
  if (head[0] != 0x05) throw TransportFailure{"malformed SOCKS5 reply"};
  if (head[1] != 0x00) return head[1];

  std::size_t addr_len = 0;
  switch (head[3]) {
    case 0x01: addr_len = 4; break;
    case 0x04: addr_len = 16; break;
    case 0x03: {
      std::uint8_t n = 0;
      read_exact(proxy, &n, 1, deadline);
      addr_len = n;
      break;
    }
    default: throw TransportFailure{"malformed SOCKS5 bound address"};
  }
  std::uint8_t scratch[258];
  read_exact(proxy, scratch, addr_len + 2, deadline);
  return 0;
}

std::string_view socks5_reply_text(int code) noexcept {
  switch (code) {
    case 0x01: return "general SOCKS server failure";
    case 0x02: return "connection not allowed by ruleset";
    case 0x03: return "network unreachable";
    case 0x04: return "host unreachable";
    case 0x05: return "connection refused";
    case 0x06: return "TTL expired";
    case 0x07: return "command not supported";
    case 0x08: return "address type not supported";
    default: return "unknown SOCKS5 error";
  }
}

}  // namespace onionlens::harvester::detail
