#include <doctest.h>

#include <random>

#include "edgeprune/wire.hpp"

using namespace edgeprune;
using namespace edgeprune::wire;

namespace {

// Field-by-field reference encoder.
std::vector<std::uint8_t> oracle_encode(std::uint8_t flags, std::uint16_t edge, std::uint32_t seq,
                                        const std::vector<Token>& tokens, std::uint32_t token_size) {
  std::vector<std::uint8_t> b{'E', 'P', 'R', 'N', 1, flags};
  b.push_back(edge >> 8);
  b.push_back(edge & 0xff);
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(seq >> s));
  b.push_back(static_cast<std::uint8_t>(tokens.size() >> 8));
  b.push_back(static_cast<std::uint8_t>(tokens.size()));
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(token_size >> s));
  for (const auto& t : tokens) b.insert(b.end(), t.begin(), t.end());
  return b;
}

}  // namespace

TEST_CASE("hand-encoded single-token frame") {
  std::vector<Token> tokens{{1, 2, 3, 4}};
  auto bytes = encode_frame(0, 0, tokens, 4);
  std::vector<std::uint8_t> expected{0x45, 0x50, 0x52, 0x4E, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
                                     0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x04, 0x01, 0x02, 0x03, 0x04};
  CHECK(bytes == expected);
  auto f = decode_frame(bytes);
  CHECK(f.atr == 1);
  CHECK(f.tokens == tokens);
  CHECK_FALSE(f.eos());
}

TEST_CASE("EOS frame is an 18-byte header with bit0 set") {
  auto bytes = encode_eos(3, 9, 16);
  CHECK(bytes.size() == kHeaderSize);
  CHECK(bytes.size() == 18);
  CHECK(bytes[5] == 0x01);
  auto f = decode_frame(bytes);
  CHECK(f.eos());
  CHECK(f.atr == 0);
  CHECK(f.seq == 9);
  CHECK(f.edge_index == 3);
}

TEST_CASE("zero-atr data frame is legal") {
  auto bytes = encode_frame(1, 5, {}, 8);
  CHECK(bytes.size() == 18);
  auto f = decode_frame(bytes);
  CHECK_FALSE(f.eos());
  CHECK(f.atr == 0);
}

TEST_CASE("property: 10^4 random frames round-trip and match the reference encoder") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 10000; ++i) {
    auto edge = static_cast<std::uint16_t>(rng());
    auto seq = static_cast<std::uint32_t>(rng());
    auto token_size = static_cast<std::uint32_t>(1 + rng() % 64);
    std::size_t atr = rng() % 6;
    std::vector<Token> tokens(atr, Token(token_size));
    for (auto& t : tokens)
      for (auto& b : t) b = static_cast<std::uint8_t>(rng());
    auto bytes = encode_frame(edge, seq, tokens, token_size);
    REQUIRE(bytes == oracle_encode(0, edge, seq, tokens, token_size));
    auto f = decode_frame(bytes);
    REQUIRE(f == Frame{0, edge, seq, static_cast<std::uint16_t>(atr), token_size, tokens});
  }
}

TEST_CASE("decoder rejects malformed frames") {
  auto good = encode_frame(0, 0, std::vector<Token>{{1, 2, 3, 4}}, 4);
  auto mutate = [&](std::size_t at, std::uint8_t v) {
    auto b = good;
    b[at] = v;
    return b;
  };
  CHECK_THROWS_AS(decode_frame(mutate(0, 'X')), WireError);
  CHECK_THROWS_AS(decode_frame(mutate(4, 2)), WireError);
  CHECK_THROWS_AS(decode_frame(mutate(5, 0x02)), WireError);
  CHECK_THROWS_AS(decode_frame(mutate(5, 0x01)), WireError);  // EOS with atr 1
  auto shorter = good;
  shorter.pop_back();
  CHECK_THROWS_AS(decode_frame(shorter), WireError);
  auto longer = good;
  longer.push_back(0);
  CHECK_THROWS_AS(decode_frame(longer), WireError);
  CHECK_THROWS_AS(decode_header(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)), WireError);
  CHECK_THROWS_AS(encode_frame(0, 0, std::vector<Token>{{1, 2, 3}}, 4), WireError);
}

TEST_CASE("sequence checker detects gaps, regressions and foreign frames") {
  SequenceChecker c(2, 8);
  auto h = [](std::uint16_t e, std::uint32_t s, std::uint32_t ts) { return FrameHeader{0, e, s, 1, ts}; };
  c.check(h(2, 0, 8));
  c.check(h(2, 1, 8));
  CHECK(c.expected() == 2);
  try {
    c.check(h(2, 4, 8));
    FAIL("expected gap");
  } catch (const WireError& e) {
    CHECK(std::string(e.what()).find("seq gap") != std::string::npos);
  }
  SequenceChecker r(2, 8);
  r.check(h(2, 0, 8));
  CHECK_THROWS_AS(r.check(h(2, 0, 8)), WireError);
  SequenceChecker x(2, 8);
  CHECK_THROWS_AS(x.check(h(3, 0, 8)), WireError);
  CHECK_THROWS_AS(x.check(h(2, 0, 4)), WireError);
}

TEST_CASE("hello encoding") {
  auto b = encode_hello({0x0102030405060708ULL, 0x0A0B});
  std::array<std::uint8_t, 15> expected{'E', 'P', 'H', 'S', 1, 1, 2, 3, 4, 5, 6, 7, 8, 0x0A, 0x0B};
  CHECK(b == expected);
  auto h = decode_hello(b);
  CHECK(h.graph_hash == 0x0102030405060708ULL);
  CHECK(h.edge_index == 0x0A0B);
  auto bad = b;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_hello(bad), WireError);
  CHECK(describe(Ack::kGraphMismatch) == "graph hash mismatch");
  CHECK(static_cast<int>(Ack::kGraphMismatch) == 1);
  CHECK(static_cast<int>(Ack::kEdgeMismatch) == 2);
}
