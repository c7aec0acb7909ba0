#include "transport/socket.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "mmsf/transport/errors.hpp"

namespace mmsf::transport::net {
namespace {

using Clock = std::chrono::steady_clock;

std::string errno_text(int err) { return std::strerror(err); }

// Remaining poll timeout in ms, -1 for "forever".
int remaining_ms(Clock::time_point deadline, bool forever) {
  if (forever) return -1;
  auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now()).count();
  return left < 0 ? 0 : static_cast<int>(left);
}

// Returns false on timeout.
bool wait_for(int fd, short events, Clock::time_point deadline, bool forever) {
  for (;;) {
    pollfd p{fd, events, 0};
    int rc = ::poll(&p, 1, remaining_ms(deadline, forever));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw IoError("poll failed: " + errno_text(errno));
  }
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

Socket::~Socket() { reset(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    reset();
    fd_ = other.release();
  }
  return *this;
}

void Socket::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown_both() const {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::shutdown_write() const {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

void Socket::set_abortive_close() const {
  if (fd_ < 0) return;
  linger l{1, 0};
  ::setsockopt(fd_, SOL_SOCKET, SO_LINGER, &l, sizeof l);
}

Socket connect_tcp(const std::string& host, std::uint16_t port, Millis timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string where = host + ":" + std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
    throw ConnectError("cannot resolve " + where + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) {
      last_error = errno_text(errno);
      continue;
    }
    int flags = ::fcntl(s.fd(), F_GETFL);
    ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(s.fd(), ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno != EINPROGRESS) {
      last_error = errno_text(errno);
      continue;
    }
    if (rc != 0) {
      const bool forever = timeout.count() < 0;
      if (!wait_for(s.fd(), POLLOUT, Clock::now() + timeout, forever)) {
        last_error = "timed out";
        continue;
      }
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) {
        last_error = errno_text(err);
        continue;
      }
    }
    ::fcntl(s.fd(), F_SETFL, flags);
    set_nodelay(s.fd());
    ::freeaddrinfo(res);
    return s;
  }
  ::freeaddrinfo(res);
  throw ConnectError("cannot connect to " + where + ": " + last_error);
}

Socket listen_tcp(const std::string& host, std::uint16_t port, int backlog) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw BindError("socket: " + errno_text(errno));
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw BindError("invalid listen address '" + host + "'");
  }
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw BindError("cannot bind " + host + ":" + std::to_string(port) + ": " + errno_text(errno));
  }
  if (::listen(s.fd(), backlog) != 0) throw BindError("listen: " + errno_text(errno));
  return s;
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

Socket accept_tcp(const Socket& listener, Millis timeout) {
  const bool forever = timeout.count() < 0;
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    pollfd p{listener.fd(), POLLIN, 0};
    int rc = ::poll(&p, 1, remaining_ms(deadline, forever));
    if (rc == 0) return Socket();
    if (rc < 0) {
      if (errno == EINTR) continue;
      return Socket();
    }
    if (p.revents & (POLLHUP | POLLERR | POLLNVAL)) return Socket();
    int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      set_nodelay(fd);
      return Socket(fd);
    }
    if (errno == EINTR || errno == EAGAIN || errno == ECONNABORTED) continue;
    return Socket();
  }
}

void write_all(const Socket& s, std::span<const std::byte> data, Millis timeout) {
  const bool forever = timeout.count() < 0;
  const auto deadline = Clock::now() + timeout;
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(s.fd(), data.data() + off, data.size() - off, MSG_NOSIGNAL | MSG_DONTWAIT);
    if (n > 0) {
      off += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      if (!wait_for(s.fd(), POLLOUT, deadline, forever)) throw IoError("send timed out");
      continue;
    }
    throw IoError("send failed: " + errno_text(errno));
  }
}

bool read_exact(const Socket& s, std::span<std::byte> out, Millis timeout) {
  const bool forever = timeout.count() < 0;
  const auto deadline = Clock::now() + timeout;
  std::size_t off = 0;
  while (off < out.size()) {
    if (!wait_for(s.fd(), POLLIN, deadline, forever)) throw IoError("receive timed out");
    ssize_t n = ::recv(s.fd(), out.data() + off, out.size() - off, MSG_DONTWAIT);
    if (n > 0) {
      off += static_cast<std::size_t>(n);
      continue;
    }
    if (n == 0) {
      if (off == 0) return false;
      throw IoError("connection closed mid-message");
    }
    if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
    throw IoError("receive failed: " + errno_text(errno));
  }
  return true;
}

std::string read_line(const Socket& s, Millis timeout, std::size_t max_len) {
  std::string line;
  std::byte c{};
  for (;;) {
    if (!read_exact(s, std::span<std::byte>(&c, 1), timeout)) throw IoError("connection closed during handshake");
    if (static_cast<char>(c) == '\n') return line;
    line.push_back(static_cast<char>(c));
    if (line.size() > max_len) throw IoError("handshake line too long");
  }
}

}  // namespace mmsf::transport::net
