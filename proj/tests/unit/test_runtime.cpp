#include <doctest.h>

#include <future>
#include <numeric>

#include "edgeprune/analyzer.hpp"
#include "edgeprune/deploy.hpp"
#include "edgeprune/graphgen.hpp"
#include "edgeprune/rng.hpp"
#include "edgeprune/runtime.hpp"
#include "support.hpp"

using namespace edgeprune;
using namespace std::chrono_literals;

namespace {

DeploymentManifest local_manifest(const Json& doc) {
  auto g = application_graph_from_json(doc);
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"local", 7100}}));
  Json m = {{"assignments", Json::object()}};
  for (const auto& a : g.actors) m["assignments"][a.id] = {"local", "cpu0"};
  auto manifests = partition(g, p, mapping_from_json(m, g, p));
  REQUIRE(manifests.size() == 1);
  return manifests[0];
}

Json chain(const std::string& middle_kernel, std::uint64_t frames, std::uint32_t size = 16) {
  return {{"name", "chain"},
          {"actors",
           {{{"id", "src"}, {"kind", "SPA"}, {"kernel", "source"}, {"kernel_params", {{"frames", frames}, {"seed", 3}}},
             {"ports", {{{"id", "out"}, {"direction", "output"}}}}},
            {{"id", "mid"}, {"kind", "SPA"}, {"kernel", middle_kernel},
             {"ports", {{{"id", "in"}, {"direction", "input"}}, {{"id", "out"}, {"direction", "output"}}}}},
            {{"id", "snk"}, {"kind", "SPA"}, {"kernel", "sink"}, {"kernel_params", {{"path", "out.bin"}}},
             {"ports", {{{"id", "in"}, {"direction", "input"}}}}}}},
          {"edges",
           {{{"id", "a"}, {"producer", {"src", "out"}}, {"consumer", {"mid", "in"}}, {"token_size", size}},
            {{"id", "b"}, {"producer", {"mid", "out"}}, {"consumer", {"snk", "in"}}, {"token_size", size}}}}};
}

RunStats run_local(const Json& doc, const testsupport::TempDir& dir, RunOptions options = {},
                   const KernelRegistry& registry = default_registry()) {
  options.base_dir = dir.path();
  return run_program(local_manifest(doc), registry, options);
}

std::vector<std::uint8_t> expected_source_bytes(std::uint64_t seed, std::uint64_t frames, std::size_t size) {
  std::vector<std::uint8_t> out;
  for (std::uint64_t f = 0; f < frames; ++f) {
    auto t = synthetic_token(seed, f, 0, size);
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

class ExplodeKernel : public Kernel {
 public:
  FireStatus fire(FiringContext& ctx) override {
    if (ctx.frame_index == 2) throw Error("kaboom");
    ctx.outputs[0] = ctx.inputs[0];
    return FireStatus::kOk;
  }
};

void check_edge_invariants(const RunStats& s) {
  for (const auto& e : s.edges) {
    INFO("edge " << e.id);
    CHECK(e.consumed <= e.produced + e.initial_tokens);
    CHECK(e.peak_occupancy <= e.capacity);
    CHECK(e.produced + e.initial_tokens == e.consumed + e.drained + e.discarded_partial);
  }
}

}  // namespace

TEST_CASE("identity over 5 tokens gives 5 firings and identical bytes") {
  testsupport::TempDir dir("rt_identity");
  auto s = run_local(chain("identity", 5), dir);
  REQUIRE(s.ok);
  CHECK(s.find_actor("mid")->firings == 5);
  CHECK(s.find_actor("src")->firings == 5);
  CHECK(s.frames_processed == 5);
  CHECK(s.find_edge("a")->produced == 5);
  CHECK(s.find_edge("b")->consumed == 5);
  CHECK(testsupport::bytes_of(dir / "out.bin") == expected_source_bytes(3, 5, 16));
  check_edge_invariants(s);
}

TEST_CASE("source with 10 frames fires 10 times then ends the stream") {
  testsupport::TempDir dir("rt_ten");
  auto s = run_local(chain("busywork", 10), dir);
  REQUIRE(s.ok);
  CHECK(s.find_actor("src")->firings == 10);
  CHECK(s.find_actor("snk")->firings == 10);
  CHECK(s.frames.size() == 10);
  for (const auto& f : s.frames) {
    REQUIRE(f.acquired);
    REQUIRE(f.committed);
    CHECK(*f.committed >= *f.acquired);
  }
  for (const auto& a : s.actors) {
    for (std::size_t i = 1; i < a.log.size(); ++i) {
      CHECK(a.log[i].frame == a.log[i - 1].frame + 1);
      CHECK(a.log[i].start >= a.log[i - 1].end);
    }
  }
}

TEST_CASE("zero frames shut down cleanly with zero counters") {
  testsupport::TempDir dir("rt_zero");
  RunOptions o;
  o.frames = 0;
  auto s = run_local(chain("identity", 5), dir, o);
  REQUIRE(s.ok);
  CHECK(s.frames_processed == 0);
  for (const auto& a : s.actors) CHECK(a.firings == 0);
  for (const auto& e : s.edges) {
    CHECK(e.produced == 0);
    CHECK(e.consumed == 0);
  }
}

TEST_CASE("vehicle graph runs locally and is deterministic") {
  testsupport::TempDir dir("rt_vehicle");
  graphgen::VehicleOptions v;
  v.frames = 3;
  v.output_path = "o.bin";
  auto s = run_local(graphgen::vehicle_graph(v), dir);
  REQUIRE(s.ok);
  CHECK(s.frames_processed == 3);
  auto first = testsupport::bytes_of(dir / "o.bin");
  CHECK(first.size() == 3 * 16);
  auto again = run_local(graphgen::vehicle_graph(v), dir);
  REQUIRE(again.ok);
  CHECK(testsupport::bytes_of(dir / "o.bin") == first);
  auto probs = decode_floats(std::span(first).subspan(0, 16));
  CHECK(std::abs(probs[0] + probs[1] + probs[2] + probs[3] - 1.0f) < 1e-5f);
}

TEST_CASE("CA-driven DPG: skips, symmetric rates and edge invariants") {
  testsupport::TempDir dir("rt_dpg");
  const std::uint32_t url = 3;
  const std::uint64_t frames = 300, seed = 17;
  auto s = run_local(graphgen::dpg_graph(url, frames, seed), dir);
  REQUIRE(s.ok);
  CHECK(s.rate_violations == 0);

  Xoshiro256 rng(seed);
  std::uint64_t zeros = 0, total = 0;
  for (std::uint64_t i = 0; i < frames; ++i) {
    auto r = rng.uniform(0, url);
    zeros += r == 0;
    total += r;
  }
  CHECK(s.find_actor("dpa")->skipped == zeros);
  CHECK(s.find_actor("dpa")->firings + s.find_actor("dpa")->skipped == frames);
  CHECK(s.find_edge("da_dpa")->produced == total);
  CHECK(s.find_edge("dpa_da")->consumed == total);
  CHECK(s.find_actor("snk")->firings == frames);
  for (const auto& e : s.edges) {
    INFO("edge " << e.id);
    CHECK(e.produced == e.consumed);
  }
  check_edge_invariants(s);
}

TEST_CASE("a rate above url is a counted violation") {
  testsupport::TempDir dir("rt_violation");
  Json g = graphgen::dpg_graph(2, 5, 1);
  for (auto& a : g["actors"])
    if (a["id"] == "ca") a["kernel_params"] = {{"rates", {1, 5}}, {"frames", 5}};
  auto s = run_local(g, dir);
  CHECK_FALSE(s.ok);
  CHECK(s.rate_violations >= 1);
}

TEST_CASE("kernel failure propagates and marks the run failed") {
  testsupport::TempDir dir("rt_fail");
  auto reg = default_registry();
  reg.add("explode", [](const KernelSetup&) { return std::make_unique<ExplodeKernel>(); });
  auto s = run_local(chain("explode", 10), dir, {}, reg);
  CHECK_FALSE(s.ok);
  REQUIRE_FALSE(s.errors.empty());
  CHECK(s.errors.front().find("actor mid: kaboom") != std::string::npos);
  CHECK(s.find_actor("snk")->firings == 2);
}

TEST_CASE("unknown kernel is reported by actor before anything runs") {
  testsupport::TempDir dir("rt_unknown");
  auto s = run_local(chain("no_such_kernel", 3), dir);
  CHECK_FALSE(s.ok);
  REQUIRE_FALSE(s.errors.empty());
  CHECK(s.errors.front().find("unknown kernel 'no_such_kernel'") != std::string::npos);
  CHECK(s.errors.front().find("mid") != std::string::npos);
}

TEST_CASE("two in-process devices reproduce the local output") {
  testsupport::TempDir dir("rt_split");
  auto base = testsupport::free_ports(4);
  auto g = application_graph_from_json(chain("identity", 20));
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"c", base}, {"s", base}}));
  auto m = mapping_from_json(graphgen::mapping_json({{"src", "c"}, {"mid", "c"}, {"snk", "s"}}), g, p);
  auto manifests = partition(g, p, m);
  REQUIRE(manifests.size() == 2);
  RunOptions o;
  o.base_dir = dir.path();
  auto stats = testsupport::run_all(manifests, o);
  for (const auto& s : stats) CHECK(s.ok);
  CHECK(testsupport::bytes_of(dir / "out.bin") == expected_source_bytes(3, 20, 16));
  const auto* tx = stats[0].find_net("b");
  REQUIRE(tx != nullptr);
  CHECK(tx->role == "TX");
  CHECK(tx->frames == 20);
  CHECK(tx->port == base);
}

TEST_CASE("absent server fails the startup barrier naming the edge") {
  testsupport::TempDir dir("rt_barrier");
  auto base = testsupport::free_ports(4);
  auto g = application_graph_from_json(chain("identity", 3));
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"c", base}, {"s", base}}));
  auto m = mapping_from_json(graphgen::mapping_json({{"src", "c"}, {"mid", "c"}, {"snk", "s"}}), g, p);
  auto manifests = partition(g, p, m);
  RunOptions o;
  o.base_dir = dir.path();
  o.connect_timeout = 300ms;
  auto s = run_program(manifests[0], default_registry(), o);
  CHECK_FALSE(s.ok);
  REQUIRE_FALSE(s.errors.empty());
  CHECK(s.errors.front().find("startup barrier failed") != std::string::npos);
  CHECK(s.errors.front().find("edge b") != std::string::npos);
  for (const auto& a : s.actors) CHECK(a.firings == 0);
}

TEST_CASE("injected drop is detected as a seq gap") {
  testsupport::TempDir dir("rt_drop");
  auto base = testsupport::free_ports(4);
  auto g = application_graph_from_json(chain("identity", 10));
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"c", base}, {"s", base}}));
  auto m = mapping_from_json(graphgen::mapping_json({{"src", "c"}, {"mid", "c"}, {"snk", "s"}}), g, p);
  RunOptions o;
  o.base_dir = dir.path();
  o.drop_frames["b"] = 4;
  auto stats = testsupport::run_all(partition(g, p, m), o);
  CHECK_FALSE(stats[1].ok);
  bool named = false;
  for (const auto& e : stats[1].errors) named = named || (e.find("edge b") != std::string::npos && e.find("seq gap") != std::string::npos);
  CHECK(named);
}

TEST_CASE("latency feedback records a return time per frame") {
  testsupport::TempDir dir("rt_feedback");
  auto g = add_latency_feedback(application_graph_from_json(chain("busywork", 6)), "snk", "src");
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"local", 7100}}));
  auto m = mapping_from_json(graphgen::mapping_json({{"src", "local"}, {"mid", "local"}, {"snk", "local"}}), g, p);
  RunOptions o;
  o.base_dir = dir.path();
  auto s = run_program(partition(g, p, m)[0], default_registry(), o);
  REQUIRE(s.ok);
  CHECK(testsupport::bytes_of(dir / "out.bin") == expected_source_bytes(3, 6, 16));
  int with_feedback = 0;
  for (const auto& f : s.frames) {
    if (!f.feedback) continue;
    ++with_feedback;
    CHECK(*f.feedback >= *f.committed);
    CHECK(*f.end_to_end_ms() >= *f.endpoint_ms());
  }
  CHECK(with_feedback >= 5);
}

TEST_CASE("max_in_flight = 1 serializes frames") {
  testsupport::TempDir dir("rt_inflight");
  Json g = chain("busywork", 6);
  g["actors"][1]["kernel_params"] = {{"ms", 3}};
  RunOptions o;
  o.max_in_flight = 1;
  auto s = run_local(g, dir, o);
  REQUIRE(s.ok);
  REQUIRE(s.frames.size() == 6);
  for (std::size_t k = 1; k < s.frames.size(); ++k) CHECK(*s.frames[k].acquired >= *s.frames[k - 1].committed);
}

TEST_CASE("property: consistent random DPGs never block (watchdog)") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    std::uint32_t url = 1 + static_cast<std::uint32_t>(seed % 4);
    Json g = graphgen::dpg_graph(url, 80, seed, 4 + 4 * static_cast<std::uint32_t>(seed % 3));
    REQUIRE(analyzer::analyze(application_graph_from_json(g)).consistent);
    testsupport::TempDir dir("rt_watchdog");
    auto fut = std::async(std::launch::async, [&] { return run_local(g, dir); });
    REQUIRE(fut.wait_for(30s) == std::future_status::ready);
    auto s = fut.get();
    CHECK(s.ok);
    CHECK(s.rate_violations == 0);
    check_edge_invariants(s);
  }
}
