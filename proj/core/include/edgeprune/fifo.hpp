#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "edgeprune/error.hpp"

namespace edgeprune {

/// One token: exactly token_size opaque bytes.
using Token = std::vector<std::uint8_t>;

/// Thrown out of blocking calls once the owning program aborts.
class FifoAborted : public Error {
 public:
  FifoAborted() : Error("run aborted") {}
};

struct FifoCounters {
  std::uint64_t produced = 0;
  std::uint64_t consumed = 0;
  std::uint64_t drained = 0;            // left behind when the consumer stopped
  std::uint64_t discarded_partial = 0;  // fewer than a firing's worth at EOS
  std::size_t occupancy = 0;
  std::size_t peak_occupancy = 0;
  std::size_t capacity = 0;
  std::size_t initial_tokens = 0;
};

enum class PushStatus { kOk, kClosed };

/// Bounded blocking single-producer/single-consumer token queue.
/// Invariant: consumed <= produced + initial <= consumed + capacity.
class Fifo {
 public:
  Fifo(std::string edge_id, std::size_t token_size, std::size_t capacity,
       std::size_t initial_tokens = 0);

  Fifo(const Fifo&) = delete;
  Fifo& operator=(const Fifo&) = delete;

  /// Appends all tokens at once, blocking until they fit. Returns kClosed
  /// when the consumer has gone away. Throws on size mismatch or after EOS.
  PushStatus push(std::vector<Token> tokens);

  /// Returns exactly `count` tokens, or nullopt once EOS is reached with
  /// fewer than `count` left (the remainder is discarded and counted).
  std::optional<std::vector<Token>> pop(std::size_t count);

  /// Producer side is finished. A non-empty `error` marks an upstream failure.
  void push_eos(std::string error = {});

  /// Consumer side is finished: queued tokens are drained, later pushes
  /// report kClosed.
  void close();

  /// Wakes every waiter; subsequent blocking calls throw FifoAborted.
  void abort();

  const std::string& edge_id() const { return edge_id_; }
  std::size_t token_size() const { return token_size_; }
  std::size_t capacity() const { return capacity_; }
  std::optional<std::string> eos_error() const;
  bool eos() const;
  FifoCounters counters() const;

 private:
  std::string edge_id_;
  std::size_t token_size_;
  std::size_t capacity_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Token> queue_;
  FifoCounters counters_;
  bool eos_ = false;
  std::string eos_error_;
  bool closed_ = false;
  bool aborted_ = false;
};

}  // namespace edgeprune
