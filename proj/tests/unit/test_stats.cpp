#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "edgeprune/explorer.hpp"
#include "edgeprune/stats.hpp"

using namespace edgeprune;

namespace {

double nearest_rank(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace

TEST_CASE("summarize examples") {
  auto s = summarize({5, 1, 3});
  CHECK(s.count == 3);
  CHECK(s.mean == doctest::Approx(3));
  CHECK(s.median == doctest::Approx(3));
  CHECK(s.p95 == doctest::Approx(5));

  auto even = summarize({4, 1, 3, 2});
  CHECK(even.median == doctest::Approx(2.5));

  std::vector<double> twenty;
  for (int i = 1; i <= 20; ++i) twenty.push_back(i);
  CHECK(summarize(twenty).p95 == doctest::Approx(19));

  auto none = summarize({});
  CHECK(none.count == 0);
  CHECK(none.mean == 0.0);
}

TEST_CASE("property: summarize matches a nearest-rank oracle") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(std::uniform_int_distribution<int>(1, 60)(rng));
    for (auto& x : v) x = std::uniform_real_distribution<double>(0, 100)(rng);
    auto s = summarize(v);
    double sum = 0;
    for (double x : v) sum += x;
    CHECK(s.mean == doctest::Approx(sum / v.size()));
    CHECK(s.p95 == nearest_rank(v, 0.95));
    CHECK(s.median >= *std::min_element(v.begin(), v.end()));
    CHECK(s.p95 >= s.median);
  }
}

TEST_CASE("frame timing derived values") {
  FrameTiming f;
  CHECK_FALSE(f.endpoint_ms().has_value());
  f.acquired = 1000;
  f.committed = 3500;
  CHECK(*f.endpoint_ms() == doctest::Approx(2.5));
  CHECK_FALSE(f.end_to_end_ms().has_value());
  f.feedback = 6000;
  CHECK(*f.end_to_end_ms() == doctest::Approx(5.0));
}

TEST_CASE("endpoint_times skips warmup frames") {
  RunStats s;
  for (std::uint64_t i = 0; i < 5; ++i) {
    FrameTiming f;
    f.index = i;
    f.acquired = static_cast<Micros>(i * 10000);
    f.committed = static_cast<Micros>(i * 10000 + 1000 * (i + 1));
    s.frames.push_back(f);
  }
  auto t = explorer::endpoint_times(s, 2);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == doctest::Approx(3.0));
  CHECK(t[2] == doctest::Approx(5.0));
}

TEST_CASE("RunStats JSON round-trip") {
  RunStats s;
  s.device = "n2";
  s.ok = false;
  s.errors = {"edge x: lost"};
  s.frames_processed = 7;
  s.rate_violations = 1;
  s.started = 10;
  s.finished = 20010;
  s.actors.push_back({"L1", "SPA", 7, 0, 12.5, {{0, 11, 22}}});
  s.edges.push_back({"e", 9, 8, 1, 0, 2, 4, 1});
  FrameTiming f;
  f.index = 3;
  f.acquired = 100;
  f.committed = 250;
  s.frames.push_back(f);
  NetStats n;
  n.edge = "e";
  n.role = "tx";
  n.port = 7301;
  n.frames = 2;
  n.bytes = 44;
  n.sends.push_back({0, 22, 1, 2, 3});
  n.receives.push_back({1, 99});
  s.net.push_back(n);

  auto back = run_stats_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
  CHECK(back.wall_ms() == doctest::Approx(20.0));
  REQUIRE(back.find_actor("L1") != nullptr);
  CHECK(back.find_actor("L1")->log[0].end == 22);
  CHECK(back.find_edge("e")->peak_occupancy == 2);
  CHECK(back.find_net("e")->sends[0].bytes == 22);
  CHECK_FALSE(back.frames[0].feedback.has_value());
  CHECK(back.find_actor("nope") == nullptr);
}

TEST_CASE("measured compute times are busy time per firing") {
  RunStats a, b;
  a.actors.push_back({"L1", "SPA", 4, 0, 20.0, {}});
  b.actors.push_back({"L2", "SPA", 2, 0, 3.0, {}});
  b.actors.push_back({"idle", "SPA", 0, 0, 0.0, {}});
  auto c = explorer::measured_compute_ms({a, b});
  CHECK(c.at("L1") == doctest::Approx(5.0));
  CHECK(c.at("L2") == doctest::Approx(1.5));
  CHECK_FALSE(c.contains("idle"));
}
