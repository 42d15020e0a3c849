#include <doctest.h>

#include <random>
#include <set>

#include "edgeprune/deploy.hpp"
#include "edgeprune/error.hpp"
#include "edgeprune/graphgen.hpp"
#include "edgeprune/launch.hpp"
#include "support.hpp"

using namespace edgeprune;
using namespace std::chrono_literals;

namespace {

const std::vector<std::string> kVehicleActors{"Input", "L1", "L2", "L3", "L4L5"};

Mapping prefix_mapping(const ApplicationGraph& g, const PlatformGraph& p, std::size_t k) {
  std::map<std::string, std::string> m;
  for (std::size_t i = 0; i < kVehicleActors.size(); ++i) m[kVehicleActors[i]] = i < k ? "n2" : "i7";
  return mapping_from_json(graphgen::mapping_json(m), g, p);
}

Json small_chain(std::uint64_t frames) {
  std::vector<double> ms{0, 0, 0, 0, 0};
  Json g = graphgen::busywork_vehicle_graph(ms, frames);
  return g;
}

std::set<std::string> actor_ids(const ApplicationGraph& g) {
  std::set<std::string> s;
  for (const auto& a : g.actors) s.insert(a.id);
  return s;
}

}  // namespace

TEST_CASE("vehicle graph cut after L2 gives two manifests joined on one port") {
  auto g = application_graph_from_json(graphgen::vehicle_graph());
  auto p = parse_platform_graph(R"({"devices":[{"id":"n2","units":["cpu0"],"address":"10.0.0.2:7200"},
      {"id":"i7","units":["cpu0"],"address":"10.0.0.7:7300"}],"links":[["n2","i7"]]})");
  auto ms = partition(g, p, prefix_mapping(g, p, 3));
  REQUIRE(ms.size() == 2);
  CHECK(ms[0].device == "n2");
  CHECK(ms[1].device == "i7");
  CHECK(actor_ids(ms[0].subgraph) == std::set<std::string>{"Input", "L1", "L2", "tx.L2_L3"});
  CHECK(actor_ids(ms[1].subgraph) == std::set<std::string>{"L3", "L4L5", "rx.L2_L3"});
  REQUIRE(ms[0].net_edges.size() == 1);
  REQUIRE(ms[1].net_edges.size() == 1);
  const auto& tx = ms[0].net_edges[0];
  const auto& rx = ms[1].net_edges[0];
  CHECK(tx.role == NetRole::kTx);
  CHECK(rx.role == NetRole::kRx);
  CHECK(tx.port == 7300);
  CHECK(rx.port == 7300);
  CHECK(tx.host == "10.0.0.7");
  CHECK(tx.token_size == 73728);
  CHECK(tx.edge_index == 0);
  CHECK(ms[0].graph_hash == g.graph_hash);
}

TEST_CASE("all-local mapping gives one manifest without net edges") {
  auto g = application_graph_from_json(graphgen::vehicle_graph());
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"n2", 7100}, {"i7", 7100}}));
  auto ms = partition(g, p, prefix_mapping(g, p, 5));
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].net_edges.empty());
  CHECK(ms[0].subgraph.actors.size() == 5);
  CHECK(ms[0].subgraph.edges.size() == 4);
}

TEST_CASE("dual-input graph over three devices puts two RX FIFOs on distinct ports") {
  auto g = application_graph_from_json(graphgen::dual_input_graph());
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"a", 7100}, {"b", 7100}, {"i7", 7400}}));
  std::map<std::string, std::string> m;
  for (const auto& a : g.actors) m[a.id] = a.id.ends_with("_a") ? "a" : a.id.ends_with("_b") ? "b" : "i7";
  auto ms = partition(g, p, mapping_from_json(graphgen::mapping_json(m), g, p));
  REQUIRE(ms.size() == 3);
  const auto& server = ms[2];
  CHECK(server.device == "i7");
  REQUIRE(server.net_edges.size() == 2);
  CHECK(server.net_edges[0].port != server.net_edges[1].port);
  for (const auto& ne : server.net_edges) {
    CHECK(ne.role == NetRole::kRx);
    CHECK(ne.port >= 7400);
    CHECK(ne.port < 7402);
  }
}

TEST_CASE("property: random mappings give a true partition with paired FIFOs") {
  auto g = application_graph_from_json(graphgen::deep_chain_graph());
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"d0", 7100}, {"d1", 8100}, {"d2", 9100}}));
  std::mt19937 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    std::map<std::string, std::string> m;
    for (const auto& a : g.actors) m[a.id] = "d" + std::to_string(rng() % 3);
    auto mapping = mapping_from_json(graphgen::mapping_json(m), g, p);
    auto ms = partition(g, p, mapping);

    std::multiset<std::string> actors, local_edges;
    std::map<std::string, std::vector<const NetEdge*>> halves;
    for (const auto& man : ms) {
      for (const auto& a : man.subgraph.actors)
        if (a.kind != ActorKind::kTXF && a.kind != ActorKind::kRXF) actors.insert(a.id);
      for (const auto& e : man.subgraph.edges) {
        bool fifo = man.subgraph.find_actor(e.producer.actor)->kind == ActorKind::kRXF ||
                    man.subgraph.find_actor(e.consumer.actor)->kind == ActorKind::kTXF;
        if (!fifo) local_edges.insert(e.id);
      }
      for (const auto& ne : man.net_edges) halves[ne.edge].push_back(&ne);
    }
    auto ids = actor_ids(g);
    CHECK(actors == std::multiset<std::string>(ids.begin(), ids.end()));
    auto cuts = cut_edges(g, mapping);
    CHECK(halves.size() == cuts.size());
    CHECK(local_edges.size() + cuts.size() == g.edges.size());
    for (const auto& [edge, h] : halves) {
      REQUIRE(h.size() == 2);
      CHECK(h[0]->role != h[1]->role);
      CHECK(h[0]->port == h[1]->port);
      CHECK(h[0]->edge_index == h[1]->edge_index);
    }
    auto again = partition(g, p, mapping);
    REQUIRE(again.size() == ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) CHECK(again[i].net_edges == ms[i].net_edges);
  }
}

TEST_CASE("base port precedence") {
  auto g = application_graph_from_json(graphgen::vehicle_graph());
  auto p = parse_platform_graph(R"({"devices":[{"id":"n2","units":["cpu0"]},{"id":"i7","units":["cpu0"],"address":"127.0.0.1:7500"}]})");
  CompileOptions o;
  CHECK(partition(g, p, prefix_mapping(g, p, 3), o)[1].net_edges[0].port == 7500);
  o.base_port = 9000;
  CHECK(partition(g, p, prefix_mapping(g, p, 3), o)[1].net_edges[0].port == 9000);
  auto q = parse_platform_graph(R"({"devices":[{"id":"n2","units":["cpu0"]},{"id":"i7","units":["cpu0"]}]})");
  CHECK(partition(g, q, prefix_mapping(g, q, 3))[1].net_edges[0].port == kDefaultBasePort);
}

TEST_CASE("partition rejections") {
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"a", 7100}, {"b", 7100}}));
  SUBCASE("DPG spanning devices") {
    auto g = application_graph_from_json(graphgen::dpg_graph(2, 1, 1));
    auto m = mapping_from_json(graphgen::mapping_json({{"src", "a"}, {"ca", "a"}, {"da_in", "a"}, {"dpa", "b"},
                                                       {"da_out", "a"}, {"snk", "a"}}), g, p);
    CHECK_THROWS_AS(partition(g, p, m), ValidationError);
  }
  SUBCASE("inconsistent graph") {
    ParseOptions lenient;
    lenient.check_model_rules = false;
    auto g = application_graph_from_json(graphgen::analyzer_fixtures().at("cycle"), lenient);
    auto m = mapping_from_json(graphgen::mapping_json({{"a", "a"}, {"b", "b"}}), g, p);
    CHECK_THROWS_AS(partition(g, p, m), ValidationError);
  }
}

TEST_CASE("manifest emit and load round-trip") {
  auto g = application_graph_from_json(graphgen::vehicle_graph());
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"n2", 7100}, {"i7", 7200}}));
  for (const auto& m : partition(g, p, prefix_mapping(g, p, 2))) {
    auto text = emit_manifest(m);
    auto back = load_manifest(text);
    CHECK(back.device == m.device);
    CHECK(back.graph_hash == m.graph_hash);
    CHECK(back.base_port == m.base_port);
    CHECK(back.net_edges == m.net_edges);
    CHECK(back.subgraph.graph_hash == m.subgraph.graph_hash);
    CHECK(emit_manifest(back) == text);
  }
  Json bad = to_json(partition(g, p, prefix_mapping(g, p, 2))[0]);
  bad["schema_version"] = 99;
  CHECK_THROWS_AS(manifest_from_json(bad), ParseError);
}

TEST_CASE("manifest with an unknown kernel loads, then fails at run time naming it") {
  Json doc = small_chain(2);
  doc["actors"][2]["kernel"] = "warp_drive";
  auto g = application_graph_from_json(doc);
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"n2", 7100}}));
  auto ms = partition(g, p, mapping_from_json(graphgen::mapping_json({{"Input", "n2"}, {"L1", "n2"}, {"L2", "n2"}, {"L3", "n2"}, {"L4L5", "n2"}}), g, p));
  auto loaded = load_manifest(emit_manifest(ms[0]));
  auto s = run_program(loaded, default_registry());
  CHECK_FALSE(s.ok);
  REQUIRE_FALSE(s.errors.empty());
  CHECK(s.errors[0].find("warp_drive") != std::string::npos);
}

TEST_CASE("tampered graph hash is rejected at the handshake") {
  auto base = testsupport::free_ports(4);
  auto g = application_graph_from_json(small_chain(3));
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"n2", base}, {"i7", base}}));
  auto ms = partition(g, p, prefix_mapping(g, p, 3));
  ms[0].graph_hash ^= 1;
  RunOptions o;
  o.connect_timeout = 3000ms;
  auto stats = testsupport::run_all(ms, o);
  CHECK_FALSE(stats[0].ok);
  CHECK_FALSE(stats[1].ok);
  bool named = false;
  for (const auto& e : stats[0].errors) named = named || e.find("graph hash mismatch") != std::string::npos;
  CHECK(named);
}

TEST_CASE("write_deployment and launch plan") {
  testsupport::TempDir dir("deploy_plan");
  auto g = application_graph_from_json(small_chain(3));
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"n2", 7100}, {"i7", 7100}}));
  write_deployment(dir.path(), partition(g, p, prefix_mapping(g, p, 2)));
  auto plan = read_launch_plan(dir.path());
  REQUIRE(plan.size() == 2);
  CHECK(plan[0].device == "n2");
  CHECK_FALSE(plan[0].server);
  CHECK(plan[1].server);
  CHECK(std::filesystem::exists(plan[1].manifest));
  CHECK(load_manifest(read_text_file(plan[0].manifest.string())).device == "n2");
}

TEST_CASE("launch: two processes and the degenerate single manifest") {
  auto base = testsupport::free_ports(4);
  auto g = application_graph_from_json(small_chain(5));
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"n2", base}, {"i7", base}}));
  LaunchOptions o;
  o.binary = EDGEPRUNE_CLI;
  o.connect_timeout = 10000ms;
  {
    testsupport::TempDir dir("launch_split");
    write_deployment(dir.path(), partition(g, p, prefix_mapping(g, p, 3)));
    auto r = launch(dir.path(), o);
    CHECK(r.ok);
    REQUIRE(r.devices.size() == 2);
    CHECK(r.find_device("n2")->frames_processed == 5);
    CHECK(r.find_device("i7")->frames_processed == 5);
    CHECK(to_json(r)["ok"] == true);
  }
  {
    testsupport::TempDir dir("launch_local");
    write_deployment(dir.path(), partition(g, p, prefix_mapping(g, p, 5)));
    auto r = launch(dir.path(), o);
    CHECK(r.ok);
    REQUIRE(r.devices.size() == 1);
    CHECK(r.devices[0].frames_processed == 5);
  }
}

TEST_CASE("launch reports the edge when the server never starts") {
  auto base = testsupport::free_ports(4);
  auto g = application_graph_from_json(small_chain(2));
  auto p = platform_graph_from_json(graphgen::loopback_platform({{"n2", base}, {"i7", base}}));
  testsupport::TempDir dir("launch_noserver");
  write_deployment(dir.path(), partition(g, p, prefix_mapping(g, p, 3)));
  Json plan = Json::parse(read_text_file((dir / "launch.json").string()));
  Json kept = Json::array();
  for (const auto& d : plan["devices"])
    if (d["device"] == "n2") kept.push_back(d);
  plan["devices"] = kept;
  write_text_file((dir / "launch.json").string(), plan.dump(2));
  LaunchOptions o;
  o.binary = EDGEPRUNE_CLI;
  o.connect_timeout = 500ms;
  auto r = launch(dir.path(), o);
  CHECK_FALSE(r.ok);
  REQUIRE_FALSE(r.errors.empty());
  CHECK(r.errors[0].rfind("n2: ", 0) == 0);
  CHECK(r.errors[0].find("edge L2_L3") != std::string::npos);
}

TEST_CASE("latency feedback edge insertion") {
  auto g = application_graph_from_json(graphgen::vehicle_graph());
  auto f = add_latency_feedback(g, "L4L5", "Input");
  const auto* e = f.find_edge("feedback");
  REQUIRE(e != nullptr);
  CHECK(e->token_size == 4);
  CHECK(e->initial_tokens == 1);
  CHECK(e->producer == PortRef{"L4L5", "feedback"});
  CHECK(e->consumer == PortRef{"Input", "feedback"});
  CHECK(f.graph_hash != g.graph_hash);
  CHECK_THROWS_AS(add_latency_feedback(f, "L4L5", "Input"), ValidationError);
  CHECK_THROWS_AS(add_latency_feedback(g, "L9", "Input"), ValidationError);
}
