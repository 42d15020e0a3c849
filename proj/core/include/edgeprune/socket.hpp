#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>

namespace edgeprune::net {

/// Owning TCP stream socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& other) noexcept : fd_(other.fd_.exchange(-1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  void write_all(std::span<const std::uint8_t> bytes);
  /// Fills `out` completely. Returns false on orderly EOF before the first
  /// byte; throws on errors or EOF mid-buffer.
  bool read_exact(std::span<std::uint8_t> out);
  /// Like read_exact but gives up (returns false) once `timeout` passes.
  bool read_exact_for(std::span<std::uint8_t> out, std::chrono::milliseconds timeout);

  /// Unblocks a reader in another thread.
  void shutdown();
  void close();

 private:
  std::atomic<int> fd_{-1};
};

class Listener {
 public:
  /// Binds all interfaces on `port` (0 picks an ephemeral port).
  static Listener bind(std::uint16_t port);

  Listener() = default;
  Listener(Listener&&) noexcept = default;
  Listener& operator=(Listener&&) noexcept = default;

  std::uint16_t port() const { return port_; }
  /// Returns an invalid Socket on timeout.
  Socket accept_for(std::chrono::milliseconds timeout);
  void close() { socket_.close(); }

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

/// Retries until a connection is established or `timeout` expires; returns an
/// invalid Socket on timeout.
Socket connect_with_retry(const std::string& host, std::uint16_t port,
                          std::chrono::milliseconds timeout, const std::atomic<bool>* cancel = nullptr);

}  // namespace edgeprune::net
