#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace mmsf::transport::net {

using Millis = std::chrono::milliseconds;

// Owning file descriptor for a TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset();

  // Wakes any thread blocked on the socket without releasing the descriptor.
  void shutdown_both() const;
  void shutdown_write() const;
  // Next close sends RST instead of FIN.
  void set_abortive_close() const;

 private:
  int fd_ = -1;
};

// A negative timeout blocks indefinitely.
Socket connect_tcp(const std::string& host, std::uint16_t port, Millis timeout);
Socket listen_tcp(const std::string& host, std::uint16_t port, int backlog = 64);
std::uint16_t local_port(const Socket& s);

// Returns an invalid socket when `timeout` elapses or the listener was shut down.
Socket accept_tcp(const Socket& listener, Millis timeout);

// Throws IoError on failure or timeout.
void write_all(const Socket& s, std::span<const std::byte> data, Millis timeout);

// Returns false on EOF before any byte was read; EOF mid-read or timeout
// throws IoError.
bool read_exact(const Socket& s, std::span<std::byte> out, Millis timeout);

// Reads one '\n'-terminated line (without the newline), at most max_len bytes.
std::string read_line(const Socket& s, Millis timeout, std::size_t max_len = 512);

inline constexpr Millis kForever{-1};

}  // namespace mmsf::transport::net
