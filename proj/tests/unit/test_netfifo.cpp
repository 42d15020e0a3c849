#include <doctest.h>

#include <future>
#include <random>
#include <thread>

#include "edgeprune/error.hpp"
#include "edgeprune/netfifo.hpp"

using namespace edgeprune;
using namespace edgeprune::net;
using namespace std::chrono_literals;

namespace {

constexpr std::uint64_t kHash = 0xfeedfacecafebeefULL;

struct Pair {
  std::optional<TxEndpoint> tx;
  std::optional<RxEndpoint> rx;
};

Pair connect_pair(std::uint32_t token_size, LinkShape shape = {}, std::uint16_t edge_index = 0) {
  RxListener listener("e", 0, edge_index, token_size, kHash);
  auto rx = std::async(std::launch::async, [&] { return listener.accept(5000ms); });
  Pair p;
  p.tx.emplace(TxEndpoint::connect("e", "127.0.0.1", listener.port(), {kHash, edge_index}, token_size, shape, 5000ms));
  p.rx.emplace(rx.get());
  return p;
}

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

TEST_CASE("loopback preserves order and content for random atr") {
  std::mt19937 rng(31);
  const std::uint32_t size = 24, url = 5;
  auto p = connect_pair(size);
  std::vector<std::vector<Token>> sent;
  for (int i = 0; i < 500; ++i) {
    std::vector<Token> tokens(std::uniform_int_distribution<std::uint32_t>(0, url)(rng), Token(size));
    for (auto& t : tokens)
      for (auto& b : t) b = static_cast<std::uint8_t>(rng());
    sent.push_back(tokens);
  }
  std::thread sender([&] {
    for (const auto& t : sent) p.tx->send(t);
    p.tx->send_eos();
  });
  std::vector<std::vector<Token>> got;
  for (;;) {
    auto f = p.rx->receive();
    if (f.eos()) break;
    got.push_back(f.tokens);
  }
  sender.join();
  CHECK(got == sent);
  CHECK(p.rx->records().size() >= sent.size());
  CHECK(p.tx->records().size() == sent.size());
}

TEST_CASE("graph hash mismatch is rejected with ack 1") {
  RxListener listener("e", 0, 0, 4, kHash);
  auto rx = std::async(std::launch::async, [&] { return listener.accept(2000ms); });
  try {
    TxEndpoint::connect("e", "127.0.0.1", listener.port(), {kHash + 1, 0}, 4, {}, 2000ms);
    FAIL("expected rejection");
  } catch (const NetError& e) {
    CHECK(e.edge() == "e");
    CHECK(std::string(e.what()).find("graph hash mismatch") != std::string::npos);
  }
  CHECK_THROWS_AS(rx.get(), NetError);
  REQUIRE_FALSE(listener.rejections().empty());
  CHECK(listener.rejections().front() == wire::Ack::kGraphMismatch);
}

TEST_CASE("edge index mismatch is rejected with ack 2") {
  RxListener listener("e", 0, 4, 4, kHash);
  auto rx = std::async(std::launch::async, [&] { return listener.accept(2000ms); });
  CHECK_THROWS_AS(TxEndpoint::connect("e", "127.0.0.1", listener.port(), {kHash, 5}, 4, {}, 2000ms), NetError);
  CHECK_THROWS_AS(rx.get(), NetError);
  REQUIRE_FALSE(listener.rejections().empty());
  CHECK(listener.rejections().front() == wire::Ack::kEdgeMismatch);
}

TEST_CASE("a second TX for the same edge is refused") {
  RxListener listener("e", 0, 0, 4, kHash);
  auto port = listener.port();
  auto rx = std::async(std::launch::async, [&] { return listener.accept(2000ms); });
  auto first = TxEndpoint::connect("e", "127.0.0.1", port, {kHash, 0}, 4, {}, 2000ms);
  auto endpoint = rx.get();
  CHECK_THROWS_AS(TxEndpoint::connect("e", "127.0.0.1", port, {kHash, 0}, 4, {}, 300ms), NetError);
}

TEST_CASE("timeouts name the edge") {
  RxListener listener("lonely_edge", 0, 0, 4, kHash);
  try {
    listener.accept(150ms);
    FAIL("expected timeout");
  } catch (const NetError& e) {
    CHECK(e.edge() == "lonely_edge");
  }
  std::uint16_t dead_port = 0;
  {
    auto l = Listener::bind(0);
    dead_port = l.port();
  }
  try {
    TxEndpoint::connect("tx_edge", "127.0.0.1", dead_port, {kHash, 0}, 4, {}, 150ms);
    FAIL("expected timeout");
  } catch (const NetError& e) {
    CHECK(e.edge() == "tx_edge");
  }
}

TEST_CASE("dropped frame surfaces as a seq gap on the named edge") {
  auto p = connect_pair(4);
  p.tx->drop_seq(2);
  std::thread sender([&] {
    for (std::uint8_t i = 0; i < 5; ++i) p.tx->send(std::vector<Token>{{i, i, i, i}});
    p.tx->send_eos();
  });
  CHECK(p.rx->receive().seq == 0);
  CHECK(p.rx->receive().seq == 1);
  try {
    p.rx->receive();
    FAIL("expected gap");
  } catch (const NetError& e) {
    CHECK(e.edge() == "e");
    CHECK(std::string(e.what()).find("seq gap") != std::string::npos);
  }
  p.rx->shutdown();
  sender.join();
}

TEST_CASE("connection lost before EOS is an error") {
  auto p = connect_pair(4);
  p.tx->send(std::vector<Token>{{1, 2, 3, 4}});
  p.tx->close();
  CHECK(p.rx->receive().seq == 0);
  CHECK_THROWS_AS(p.rx->receive(), NetError);
}

TEST_CASE("TX byte stream is deterministic") {
  auto stream = [] {
    Listener l = Listener::bind(0);
    std::vector<std::uint8_t> bytes;
    std::thread reader([&] {
      Socket s = l.accept_for(5000ms);
      std::array<std::uint8_t, wire::kHelloSize> hello{};
      s.read_exact(hello);
      std::uint8_t ack = 0;
      s.write_all(std::span(&ack, 1));
      std::uint8_t b = 0;
      while (s.read_exact(std::span(&b, 1))) bytes.push_back(b);
    });
    auto tx = TxEndpoint::connect("e", "127.0.0.1", l.port(), {kHash, 3}, 2, {}, 5000ms);
    std::mt19937 rng(4);
    for (int i = 0; i < 50; ++i) {
      std::vector<Token> t(i % 4, Token{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())});
      tx.send(t);
    }
    tx.send_eos();
    tx.close();
    reader.join();
    return bytes;
  };
  auto a = stream();
  CHECK(a.size() > 50 * 18);
  CHECK(a == stream());
}

TEST_CASE("unshaped send is a passthrough") {
  auto p = connect_pair(4);
  LinkShape none;
  CHECK_FALSE(none.shaped());
  std::thread sender([&] {
    p.tx->send(std::vector<Token>{{9, 9, 9, 9}});
    p.tx->send_eos();
  });
  CHECK(p.rx->receive().tokens == std::vector<Token>{{9, 9, 9, 9}});
  sender.join();
  CHECK(ms_between(p.tx->records()[0].start, p.tx->records()[0].end) < 5.0);
}

TEST_CASE("110592-byte frame at 11.2 MB/s occupies about 9.9 ms") {
  auto p = connect_pair(110592, {11.2e6, 0.0});
  std::thread reader([&] {
    while (!p.rx->receive().eos()) {
    }
  });
  std::vector<Token> frame{Token(110592, 0x5a)};
  std::vector<double> spans;
  for (int i = 0; i < 5; ++i) {
    p.tx->send(frame);
    spans.push_back(ms_between(p.tx->records().back().start, p.tx->records().back().end));
  }
  p.tx->send_eos();
  reader.join();
  const double expected = 110592.0 / 11.2e6 * 1000.0;  // 9.874 ms
  for (double s : spans) {
    CHECK(s >= expected * 0.85);
    CHECK(s <= expected * 1.15);
  }
}

TEST_CASE("100 frames at 2.3 MB/s, 2.15 ms sustain the shaped throughput") {
  const std::uint32_t size = 11500;
  auto p = connect_pair(size, {2.3e6, 2.15});
  std::thread reader([&] {
    while (!p.rx->receive().eos()) {
    }
  });
  std::vector<Token> frame{Token(size, 0x11)};
  const auto ready = Clock::now();  // every frame queued up front
  for (int i = 0; i < 100; ++i) p.tx->send(frame, ready);
  p.tx->send_eos();
  reader.join();
  const auto& r = p.tx->records();
  REQUIRE(r.size() == 100);
  CHECK(ms_between(ready, r.front().start) >= 2.15 * 0.9);
  std::size_t bytes = 0;
  for (const auto& rec : r) bytes += rec.bytes;
  double seconds = ms_between(r.front().start, r.back().end) / 1000.0;
  double throughput = static_cast<double>(bytes) / seconds;
  CHECK(throughput >= 2.3e6 * 0.9);
  CHECK(throughput <= 2.3e6 * 1.1);
}
