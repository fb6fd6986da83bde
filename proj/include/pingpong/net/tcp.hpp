#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "pingpong/protocol/wire.hpp"

namespace pingpong::net {

inline constexpr std::uint32_t kMaxFrameLen = 1U << 26;

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
  std::string str() const { return host + ":" + std::to_string(port); }
};

// "host:port" or ":port".
inline Endpoint parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("address '" + s + "' is missing a port");
  Endpoint ep;
  ep.host = colon == 0 ? "0.0.0.0" : s.substr(0, colon);
  const auto port = std::stoul(s.substr(colon + 1));
  if (port == 0 || port > 65535) throw std::invalid_argument("bad port in '" + s + "'");
  ep.port = static_cast<std::uint16_t>(port);
  return ep;
}

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  void shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  int fd_ = -1;
};

inline addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const auto port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw NetError("cannot resolve " + ep.str() + ": " + ::gai_strerror(rc));
  return res;
}

inline Socket listen_tcp(const Endpoint& ep, int backlog = 128) {
  addrinfo* res = resolve(ep, true);
  Socket s(::socket(res->ai_family, res->ai_socktype, 0));
  if (!s.valid()) {
    ::freeaddrinfo(res);
    throw NetError("socket: " + std::string(std::strerror(errno)));
  }
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const int rc = ::bind(s.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) throw NetError("bind " + ep.str() + ": " + std::strerror(errno));
  if (::listen(s.fd(), backlog) != 0) throw NetError("listen: " + std::string(std::strerror(errno)));
  return s;
}

inline std::uint16_t local_port(const Socket& s) {
  sockaddr_in a{};
  socklen_t len = sizeof a;
  ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&a), &len);
  return ntohs(a.sin_port);
}

inline Socket connect_tcp(const Endpoint& ep) {
  addrinfo* res = resolve(ep, false);
  Socket s(::socket(res->ai_family, res->ai_socktype, 0));
  const int rc = s.valid() ? ::connect(s.fd(), res->ai_addr, res->ai_addrlen) : -1;
  ::freeaddrinfo(res);
  if (rc != 0) throw NetError("connect " + ep.str() + ": " + std::strerror(errno));
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

// Waits up to timeout_ms for a connection; nullopt on timeout.
inline std::optional<Socket> accept_tcp(const Socket& listener, int timeout_ms) {
  pollfd p{listener.fd(), POLLIN, 0};
  if (::poll(&p, 1, timeout_ms) <= 0) return std::nullopt;
  Socket s(::accept(listener.fd(), nullptr, nullptr));
  if (!s.valid()) return std::nullopt;
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

inline bool write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n) {
    const auto w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w <= 0) {
      if (w < 0 && errno == EINTR) continue;
      return false;
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

inline bool read_all(int fd, std::uint8_t* p, std::size_t n) {
  while (n) {
    const auto r = ::recv(fd, p, n, 0);
    if (r <= 0) {
      if (r < 0 && errno == EINTR) continue;
      return false;
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

// Record framing: u32 big-endian length, then the encoded frame.
inline bool send_frame(int fd, const protocol::Frame& f) {
  const Bytes body = protocol::encode(f);
  std::uint8_t len[4] = {static_cast<std::uint8_t>(body.size() >> 24), static_cast<std::uint8_t>(body.size() >> 16),
                         static_cast<std::uint8_t>(body.size() >> 8), static_cast<std::uint8_t>(body.size())};
  return write_all(fd, len, 4) && write_all(fd, body.data(), body.size());
}

// nullopt on a closed connection; MalformedPacket on a bad record.
inline std::optional<protocol::Frame> recv_frame(int fd) {
  std::uint8_t len[4];
  if (!read_all(fd, len, 4)) return std::nullopt;
  const std::uint32_t n = (std::uint32_t{len[0]} << 24) | (std::uint32_t{len[1]} << 16) |
                          (std::uint32_t{len[2]} << 8) | len[3];
  if (n > kMaxFrameLen) throw protocol::MalformedPacket("record length too large");
  Bytes buf(n);
  if (!read_all(fd, buf.data(), n)) return std::nullopt;
  return protocol::decode(buf);
}

// Waits for readability; false on timeout.
inline bool wait_readable(int fd, int timeout_ms) {
  pollfd p{fd, POLLIN, 0};
  return ::poll(&p, 1, timeout_ms) > 0;
}

}  // namespace pingpong::net
