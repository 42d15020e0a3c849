#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgeprune/fifo.hpp"

namespace edgeprune::wire {

inline constexpr std::array<std::uint8_t, 4> kFrameMagic{'E', 'P', 'R', 'N'};
inline constexpr std::array<std::uint8_t, 4> kHelloMagic{'E', 'P', 'H', 'S'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 18;
inline constexpr std::size_t kHelloSize = 15;
inline constexpr std::uint8_t kFlagEos = 0x01;

/// Header fields are big-endian on the wire:
/// magic[4] version[1] flags[1] edge_index[2] seq[4] atr[2] token_size[4].
struct Frame {
  std::uint8_t flags = 0;
  std::uint16_t edge_index = 0;
  std::uint32_t seq = 0;
  std::uint16_t atr = 0;
  std::uint32_t token_size = 0;
  std::vector<Token> tokens;

  bool eos() const { return (flags & kFlagEos) != 0; }
  bool operator==(const Frame&) const = default;
};

struct FrameHeader {
  std::uint8_t flags = 0;
  std::uint16_t edge_index = 0;
  std::uint32_t seq = 0;
  std::uint16_t atr = 0;
  std::uint32_t token_size = 0;

  std::size_t payload_size() const { return static_cast<std::size_t>(atr) * token_size; }
};

class WireError : public Error {
 public:
  using Error::Error;
};

std::vector<std::uint8_t> encode_frame(std::uint16_t edge_index, std::uint32_t seq,
                                       std::span<const Token> tokens, std::uint32_t token_size);
std::vector<std::uint8_t> encode_eos(std::uint16_t edge_index, std::uint32_t seq,
                                     std::uint32_t token_size);

/// Validates magic, version, reserved flag bits and the EOS/atr rule.
FrameHeader decode_header(std::span<const std::uint8_t> header);

/// Decodes one complete frame; rejects trailing or missing payload bytes.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Per-edge receive-side checks: seq must advance by exactly one, the edge
/// index and token size must stay fixed.
class SequenceChecker {
 public:
  SequenceChecker(std::uint16_t edge_index, std::uint32_t token_size)
      : edge_index_(edge_index), token_size_(token_size) {}
  void check(const FrameHeader& header);
  std::uint32_t expected() const { return next_; }

 private:
  std::uint16_t edge_index_;
  std::uint32_t token_size_;
  std::uint32_t next_ = 0;
};

struct Hello {
  std::uint64_t graph_hash = 0;
  std::uint16_t edge_index = 0;
};

enum class Ack : std::uint8_t { kOk = 0, kGraphMismatch = 1, kEdgeMismatch = 2, kBadHello = 3 };

std::array<std::uint8_t, kHelloSize> encode_hello(const Hello& hello);
Hello decode_hello(std::span<const std::uint8_t> bytes);
std::string describe(Ack ack);

}  // namespace edgeprune::wire
