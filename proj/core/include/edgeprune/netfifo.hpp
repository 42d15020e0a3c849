#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgeprune/socket.hpp"
#include "edgeprune/wire.hpp"

namespace edgeprune::net {

using Clock = std::chrono::steady_clock;

/// TX-side link emulation. bandwidth in bytes/s (0 = unshaped), one-way
/// latency in milliseconds.
struct LinkShape {
  double bandwidth = 0.0;
  double latency_ms = 0.0;

  bool shaped() const { return bandwidth > 0.0 || latency_ms > 0.0; }
};

struct SendRecord {
  std::uint32_t seq = 0;
  std::size_t bytes = 0;
  Clock::time_point ready;  // tokens handed to the TX FIFO
  Clock::time_point start;  // first byte written
  Clock::time_point end;    // last byte written
};

struct ReceiveRecord {
  std::uint32_t seq = 0;
  Clock::time_point at;  // frame fully decoded
};

/// Connected transmit endpoint of one cut edge. Owns its connection.
class TxEndpoint {
 public:
  /// Connects to the RX side and completes the handshake. Throws NetError
  /// naming `edge_id` on timeout or rejection.
  static TxEndpoint connect(std::string edge_id, const std::string& host, std::uint16_t port,
                            const wire::Hello& hello, std::uint32_t token_size, LinkShape shape,
                            std::chrono::milliseconds timeout,
                            const std::atomic<bool>* cancel = nullptr);

  /// Writes one frame carrying tokens.size() tokens (the atr). Pacing starts
  /// at max(ready + latency, end of previous frame).
  void send(std::span<const Token> tokens, Clock::time_point ready = Clock::now());
  void send_eos();

  /// Fault injection: the frame with this seq is silently skipped.
  void drop_seq(std::uint32_t seq) { drop_seq_ = seq; }

  const std::vector<SendRecord>& records() const { return records_; }
  const std::string& edge_id() const { return edge_id_; }
  std::uint32_t next_seq() const { return seq_; }
  void close() { socket_.close(); }

 private:
  TxEndpoint(std::string edge_id, Socket socket, std::uint16_t edge_index, std::uint32_t token_size,
             LinkShape shape)
      : edge_id_(std::move(edge_id)), socket_(std::move(socket)), edge_index_(edge_index),
        token_size_(token_size), shape_(shape) {}
  void write_paced(std::span<const std::uint8_t> bytes, Clock::time_point ready, SendRecord& rec);

  std::string edge_id_;
  Socket socket_;
  std::uint16_t edge_index_;
  std::uint32_t token_size_;
  LinkShape shape_;
  std::uint32_t seq_ = 0;
  std::optional<std::uint32_t> drop_seq_;
  Clock::time_point last_end_{};
  std::vector<SendRecord> records_;
};

/// Connected receive endpoint of one cut edge.
class RxEndpoint {
 public:
  /// Next frame, seq-checked. Throws NetError on a gap, regression, malformed
  /// frame or dropped connection (orderly close before EOS counts as dropped).
  wire::Frame receive();

  const std::vector<ReceiveRecord>& records() const { return records_; }
  const std::string& edge_id() const { return edge_id_; }
  /// Unblocks a pending receive() from another thread.
  void shutdown() { socket_.shutdown(); }

 private:
  friend class RxListener;
  RxEndpoint(std::string edge_id, Socket socket, std::uint16_t edge_index, std::uint32_t token_size)
      : edge_id_(std::move(edge_id)), socket_(std::move(socket)), checker_(edge_index, token_size) {}

  std::string edge_id_;
  Socket socket_;
  wire::SequenceChecker checker_;
  std::vector<ReceiveRecord> records_;
  bool finished_ = false;
};

/// Bound but not yet connected RX side. Binding happens before any TX
/// connects so peers can start in any order.
class RxListener {
 public:
  RxListener(std::string edge_id, std::uint16_t port, std::uint16_t edge_index,
             std::uint32_t token_size, std::uint64_t graph_hash);

  std::uint16_t port() const { return listener_.port(); }

  /// Accepts exactly one TX peer, validates its hello and acks it, then stops
  /// listening so later peers are refused. A mismatched peer gets an error
  /// ack and the call throws NetError naming the edge, as does a timeout.
  RxEndpoint accept(std::chrono::milliseconds timeout, const std::atomic<bool>* cancel = nullptr);

  /// Handshake failures seen so far (for diagnostics and tests).
  const std::vector<wire::Ack>& rejections() const { return rejections_; }

 private:
  std::string edge_id_;
  Listener listener_;
  std::uint16_t edge_index_;
  std::uint32_t token_size_;
  std::uint64_t graph_hash_;
  std::vector<wire::Ack> rejections_;
};

}  // namespace edgeprune::net
