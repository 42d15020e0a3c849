#include "edgeprune/netfifo.hpp"

#include <thread>

#include "edgeprune/error.hpp"

namespace edgeprune::net {

namespace {

constexpr std::size_t kPaceChunk = 16 * 1024;

}  // namespace

TxEndpoint TxEndpoint::connect(std::string edge_id, const std::string& host, std::uint16_t port,
                               const wire::Hello& hello, std::uint32_t token_size, LinkShape shape,
                               std::chrono::milliseconds timeout, const std::atomic<bool>* cancel) {
  auto deadline = Clock::now() + timeout;
  Socket s = connect_with_retry(host, port, timeout, cancel);
  if (!s.valid()) {
    throw NetError(edge_id, "cannot connect to " + host + ":" + std::to_string(port) + " within " +
                                std::to_string(timeout.count()) + " ms");
  }
  try {
    auto h = wire::encode_hello(hello);
    s.write_all(h);
    std::uint8_t ack = 0xFF;
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (!s.read_exact_for({&ack, 1}, std::max(left, std::chrono::milliseconds(1)))) {
      throw NetError(edge_id, "no handshake ack from " + host + ":" + std::to_string(port));
    }
    if (ack != 0) {
      throw NetError(edge_id, "handshake rejected: " + wire::describe(static_cast<wire::Ack>(ack)));
    }
  } catch (const NetError&) {
    throw;
  } catch (const std::exception& e) {
    throw NetError(edge_id, std::string("handshake failed: ") + e.what());
  }
  return TxEndpoint(std::move(edge_id), std::move(s), hello.edge_index, token_size, shape);
}

void TxEndpoint::write_paced(std::span<const std::uint8_t> bytes, Clock::time_point ready,
                             SendRecord& rec) {
  auto latency = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double, std::milli>(shape_.latency_ms));
  auto start = std::max(ready + latency, last_end_);
  std::this_thread::sleep_until(start);
  rec.start = Clock::now();
  if (shape_.bandwidth <= 0.0) {
    socket_.write_all(bytes);
  } else {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
      std::size_t n = std::min(kPaceChunk, bytes.size() - sent);
      socket_.write_all(bytes.subspan(sent, n));
      sent += n;
      auto due = rec.start + std::chrono::duration_cast<Clock::duration>(
                                 std::chrono::duration<double>(static_cast<double>(sent) / shape_.bandwidth));
      std::this_thread::sleep_until(due);
    }
  }
  rec.end = Clock::now();
  last_end_ = rec.end;
}

void TxEndpoint::send(std::span<const Token> tokens, Clock::time_point ready) {
  SendRecord rec;
  rec.seq = seq_;
  rec.ready = ready;
  try {
    auto bytes = wire::encode_frame(edge_index_, seq_, tokens, token_size_);
    rec.bytes = bytes.size();
    if (drop_seq_ && *drop_seq_ == seq_) {
      rec.start = rec.end = Clock::now();
    } else {
      write_paced(bytes, ready, rec);
    }
  } catch (const std::exception& e) {
    throw NetError(edge_id_, std::string("send failed: ") + e.what());
  }
  ++seq_;
  records_.push_back(rec);
}

void TxEndpoint::send_eos() {
  try {
    auto bytes = wire::encode_eos(edge_index_, seq_, token_size_);
    SendRecord rec;
    rec.seq = seq_;
    rec.bytes = bytes.size();
    write_paced(bytes, Clock::now(), rec);
    ++seq_;
  } catch (const std::exception& e) {
    throw NetError(edge_id_, std::string("send failed: ") + e.what());
  }
}

wire::Frame RxEndpoint::receive() {
  if (finished_) throw NetError(edge_id_, "receive after end of stream");
  try {
    std::vector<std::uint8_t> header(wire::kHeaderSize);
    if (!socket_.read_exact(header)) throw NetError(edge_id_, "connection closed before end of stream");
    wire::FrameHeader h = wire::decode_header(header);
    checker_.check(h);
    std::vector<std::uint8_t> frame(wire::kHeaderSize + h.payload_size());
    std::copy(header.begin(), header.end(), frame.begin());
    if (h.payload_size() > 0 &&
        !socket_.read_exact(std::span(frame).subspan(wire::kHeaderSize))) {
      throw NetError(edge_id_, "connection closed mid-frame");
    }
    wire::Frame f = wire::decode_frame(frame);
    records_.push_back({h.seq, Clock::now()});
    if (f.eos()) finished_ = true;
    return f;
  } catch (const NetError&) {
    throw;
  } catch (const std::exception& e) {
    throw NetError(edge_id_, e.what());
  }
}

RxListener::RxListener(std::string edge_id, std::uint16_t port, std::uint16_t edge_index,
                       std::uint32_t token_size, std::uint64_t graph_hash)
    : edge_id_(std::move(edge_id)), edge_index_(edge_index), token_size_(token_size),
      graph_hash_(graph_hash) {
  try {
    listener_ = Listener::bind(port);
  } catch (const std::exception& e) {
    throw NetError(edge_id_, e.what());
  }
}

RxEndpoint RxListener::accept(std::chrono::milliseconds timeout, const std::atomic<bool>* cancel) {
  auto deadline = Clock::now() + timeout;
  while (true) {
    if (cancel != nullptr && cancel->load()) throw NetError(edge_id_, "cancelled while waiting for TX peer");
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) {
      throw NetError(edge_id_, "no TX peer connected to port " + std::to_string(port()) + " within " +
                                   std::to_string(timeout.count()) + " ms");
    }
    Socket s = listener_.accept_for(std::min(left, std::chrono::milliseconds(200)));
    if (!s.valid()) continue;
    std::array<std::uint8_t, wire::kHelloSize> hello_bytes{};
    wire::Ack ack = wire::Ack::kOk;
    try {
      if (!s.read_exact_for(hello_bytes, std::max(left, std::chrono::milliseconds(1)))) {
        ack = wire::Ack::kBadHello;
      } else {
        wire::Hello hello = wire::decode_hello(hello_bytes);
        if (hello.graph_hash != graph_hash_) {
          ack = wire::Ack::kGraphMismatch;
        } else if (hello.edge_index != edge_index_) {
          ack = wire::Ack::kEdgeMismatch;
        }
      }
    } catch (const std::exception&) {
      ack = wire::Ack::kBadHello;
    }
    std::uint8_t code = static_cast<std::uint8_t>(ack);
    try {
      s.write_all({&code, 1});
    } catch (const std::exception&) {
      // peer gone; a good ack that cannot be delivered is still a failure
      if (ack == wire::Ack::kOk) ack = wire::Ack::kBadHello;
    }
    if (ack != wire::Ack::kOk) {
      rejections_.push_back(ack);
      throw NetError(edge_id_, "rejected TX peer: " + wire::describe(ack));
    }
    listener_.close();
    return RxEndpoint(edge_id_, std::move(s), edge_index_, token_size_);
  }
}

}  // namespace edgeprune::net
