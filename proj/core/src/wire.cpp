#include "edgeprune/wire.hpp"

#include <algorithm>

namespace edgeprune::wire {

namespace {

template <typename T>
void put_be(std::vector<std::uint8_t>& out, T value) {
  for (int shift = (sizeof(T) - 1) * 8; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(value >> shift));
  }
}

template <typename T>
T get_be(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v = static_cast<T>((v << 8) | bytes[offset + i]);
  return v;
}

std::vector<std::uint8_t> header_bytes(std::uint8_t flags, std::uint16_t edge_index,
                                       std::uint32_t seq, std::uint16_t atr,
                                       std::uint32_t token_size) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + static_cast<std::size_t>(atr) * token_size);
  for (auto c : kFrameMagic) out.push_back(static_cast<std::uint8_t>(c));
  out.push_back(kVersion);
  out.push_back(flags);
  put_be(out, edge_index);
  put_be(out, seq);
  put_be(out, atr);
  put_be(out, token_size);
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(std::uint16_t edge_index, std::uint32_t seq,
                                       std::span<const Token> tokens, std::uint32_t token_size) {
  if (tokens.size() > 0xFFFF) throw WireError("atr " + std::to_string(tokens.size()) + " exceeds 16 bits");
  auto out = header_bytes(0, edge_index, seq, static_cast<std::uint16_t>(tokens.size()), token_size);
  for (const auto& t : tokens) {
    if (t.size() != token_size) {
      throw WireError("token of " + std::to_string(t.size()) + " bytes in a frame of token_size " +
                      std::to_string(token_size));
    }
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

std::vector<std::uint8_t> encode_eos(std::uint16_t edge_index, std::uint32_t seq,
                                     std::uint32_t token_size) {
  return header_bytes(kFlagEos, edge_index, seq, 0, token_size);
}

FrameHeader decode_header(std::span<const std::uint8_t> header) {
  if (header.size() < kHeaderSize) throw WireError("truncated frame header");
  if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), header.begin())) {
    throw WireError("bad frame magic");
  }
  if (header[4] != kVersion) throw WireError("unsupported frame version " + std::to_string(header[4]));
  FrameHeader h;
  h.flags = header[5];
  if ((h.flags & ~kFlagEos) != 0) throw WireError("reserved frame flag bits set");
  h.edge_index = get_be<std::uint16_t>(header, 6);
  h.seq = get_be<std::uint32_t>(header, 8);
  h.atr = get_be<std::uint16_t>(header, 12);
  h.token_size = get_be<std::uint32_t>(header, 14);
  if ((h.flags & kFlagEos) && h.atr != 0) throw WireError("EOS frame with non-zero atr");
  return h;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  FrameHeader h = decode_header(bytes);
  if (bytes.size() != kHeaderSize + h.payload_size()) {
    throw WireError("payload length mismatch: header announces " + std::to_string(h.payload_size()) +
                    " bytes, frame carries " + std::to_string(bytes.size() - kHeaderSize));
  }
  Frame f{h.flags, h.edge_index, h.seq, h.atr, h.token_size, {}};
  for (std::size_t k = 0; k < h.atr; ++k) {
    auto first = bytes.begin() + static_cast<std::ptrdiff_t>(kHeaderSize + k * h.token_size);
    f.tokens.emplace_back(first, first + static_cast<std::ptrdiff_t>(h.token_size));
  }
  return f;
}

void SequenceChecker::check(const FrameHeader& header) {
  if (header.edge_index != edge_index_) {
    throw WireError("frame for edge index " + std::to_string(header.edge_index) + ", expected " +
                    std::to_string(edge_index_));
  }
  if (header.token_size != token_size_) {
    throw WireError("frame token_size " + std::to_string(header.token_size) + ", expected " +
                    std::to_string(token_size_));
  }
  if (header.seq < next_) {
    throw WireError("seq regression: got " + std::to_string(header.seq) + ", expected " +
                    std::to_string(next_));
  }
  if (header.seq > next_) {
    throw WireError("seq gap: got " + std::to_string(header.seq) + ", expected " +
                    std::to_string(next_) + " (" + std::to_string(header.seq - next_) +
                    " frame(s) lost)");
  }
  ++next_;
}

std::array<std::uint8_t, kHelloSize> encode_hello(const Hello& hello) {
  std::vector<std::uint8_t> v(kHelloMagic.begin(), kHelloMagic.end());
  v.push_back(kVersion);
  put_be(v, hello.graph_hash);
  put_be(v, hello.edge_index);
  std::array<std::uint8_t, kHelloSize> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

Hello decode_hello(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kHelloSize) throw WireError("bad hello length");
  if (!std::equal(kHelloMagic.begin(), kHelloMagic.end(), bytes.begin())) {
    throw WireError("bad hello magic");
  }
  if (bytes[4] != kVersion) throw WireError("unsupported hello version");
  return {get_be<std::uint64_t>(bytes, 5), get_be<std::uint16_t>(bytes, 13)};
}

std::string describe(Ack ack) {
  switch (ack) {
    case Ack::kOk: return "ok";
    case Ack::kGraphMismatch: return "graph hash mismatch";
    case Ack::kEdgeMismatch: return "edge index mismatch";
    case Ack::kBadHello: return "malformed hello";
  }
  return "error code " + std::to_string(static_cast<int>(ack));
}

}  // namespace edgeprune::wire
