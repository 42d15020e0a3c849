#include "edgeprune/graphgen.hpp"

#include "edgeprune/error.hpp"

namespace edgeprune::graphgen {

namespace {

Json port(const std::string& id, const char* direction, std::uint32_t url = 1, bool dynamic = false,
          std::uint32_t lrl = 1) {
  Json p = {{"id", id}, {"direction", direction}, {"url", url}};
  if (dynamic) {
    p["dynamic"] = true;
    p["lrl"] = lrl;
  }
  return p;
}

Json actor(const std::string& id, const char* kind, const std::string& kernel, Json params, Json ports) {
  return {{"id", id}, {"kind", kind}, {"kernel", kernel}, {"kernel_params", std::move(params)},
          {"ports", std::move(ports)}};
}

Json edge(const std::string& id, const std::string& pa, const std::string& pp, const std::string& ca,
          const std::string& cp, std::uint32_t token_size, std::uint32_t capacity = 1) {
  return {{"id", id},
          {"producer", {pa, pp}},
          {"consumer", {ca, cp}},
          {"token_size", token_size},
          {"capacity", capacity}};
}

Json conv_block(std::uint64_t seed) {
  return Json::array({{{"op", "conv2d"}, {"filters", 32}, {"kernel_size", 5}, {"seed", seed}},
                      {{"op", "maxpool2"}},
                      {{"op", "relu"}}});
}

Json head_layers(std::uint64_t seed) {
  return Json::array({{{"op", "dense"}, {"units", 64}, {"seed", seed}},
                      {{"op", "relu"}},
                      {{"op", "dense"}, {"units", 4}, {"seed", seed + 1}},
                      {{"op", "softmax"}}});
}

// Input, L1, L2, L3 with suffix; returns actors and edges into `g`.
void front_end(Json& g, const std::string& sfx, std::uint64_t frames, std::uint64_t seed,
               const std::string& next_actor, const std::string& next_port) {
  auto& A = g["actors"];
  auto& E = g["edges"];
  std::string in = "Input" + sfx, l1 = "L1" + sfx, l2 = "L2" + sfx, l3 = "L3" + sfx;
  A.push_back(actor(in, "SPA", "source", {{"frames", frames}, {"seed", seed}}, {port("out", "output")}));
  A.push_back(actor(l1, "SPA", "sequence", {{"input_shape", {96, 96, 3}}, {"layers", conv_block(seed + 10)}},
                    {port("in", "input"), port("out", "output")}));
  A.push_back(actor(l2, "SPA", "sequence", {{"input_shape", {48, 48, 32}}, {"layers", conv_block(seed + 20)}},
                    {port("in", "input"), port("out", "output")}));
  A.push_back(actor(l3, "SPA", "sequence",
                    {{"input_shape", {18432}},
                     {"layers", Json::array({{{"op", "dense"}, {"units", 256}, {"seed", seed + 30}},
                                             {{"op", "relu"}}})}},
                    {port("in", "input"), port("out", "output")}));
  E.push_back(edge(in + "_" + l1, in, "out", l1, "in", kVehicleTokens[0]));
  E.push_back(edge(l1 + "_" + l2, l1, "out", l2, "in", kVehicleTokens[1]));
  E.push_back(edge(l2 + "_" + l3, l2, "out", l3, "in", kVehicleTokens[2]));
  E.push_back(edge(l3 + "_" + next_actor, l3, "out", next_actor, next_port, kVehicleTokens[3]));
}

}  // namespace

Json vehicle_graph(const VehicleOptions& o) {
  Json g = {{"name", "vehicle"}, {"actors", Json::array()}, {"edges", Json::array()}};
  front_end(g, "", o.frames, o.seed, "L4L5", "in");
  g["actors"].push_back(actor("L4L5", "SPA", "sequence",
                              {{"input_shape", {256}}, {"layers", head_layers(o.seed + 40)},
                               {"path", o.output_path}},
                              {port("in", "input")}));
  return g;
}

Json busywork_vehicle_graph(const std::vector<double>& ms, std::uint64_t frames) {
  if (ms.size() != 5 || ms[0] != 0.0) throw Error("busywork vehicle graph needs 5 times, source 0");
  const char* ids[5] = {"Input", "L1", "L2", "L3", "L4L5"};
  Json g = {{"name", "vehicle-busywork"}, {"actors", Json::array()}, {"edges", Json::array()}};
  g["actors"].push_back(actor("Input", "SPA", "source", {{"frames", frames}, {"seed", 1}}, {port("out", "output")}));
  for (int i = 1; i < 5; ++i) {
    Json ports = {port("in", "input")};
    if (i < 4) ports.push_back(port("out", "output"));
    g["actors"].push_back(actor(ids[i], "SPA", "busywork", {{"ms", ms[i]}}, ports));
  }
  for (int i = 0; i < 4; ++i) {
    g["edges"].push_back(edge(std::string(ids[i]) + "_" + ids[i + 1], ids[i], "out", ids[i + 1], "in",
                              kVehicleTokens[i]));
  }
  return g;
}

std::vector<double> dcal_ms(double u) { return {0.0, 6.5 * u, 5.0 * u, 6.4 * u, 1.0 * u}; }

Json dcal_graph(double unit_ms, std::uint64_t frames) {
  Json g = busywork_vehicle_graph(dcal_ms(unit_ms), frames);
  g["name"] = "vehicle-dcal";
  return g;
}

Json dual_input_graph(const VehicleOptions& o) {
  Json g = {{"name", "vehicle-dual"}, {"actors", Json::array()}, {"edges", Json::array()}};
  front_end(g, "_a", o.frames, o.seed, "L4L5", "in_a");
  front_end(g, "_b", o.frames, o.seed + 1000, "L4L5", "in_b");
  g["actors"].push_back(actor("L4L5", "SPA", "sequence",
                              {{"input_shape", {512}}, {"layers", head_layers(o.seed + 40)},
                               {"path", o.output_path}},
                              {port("in_a", "input"), port("in_b", "input")}));
  return g;
}

Json deep_chain_graph(double ms, std::uint64_t frames) {
  constexpr int kActors = 53;
  Json g = {{"name", "deep-chain"}, {"actors", Json::array()}, {"edges", Json::array()}};
  auto id = [](int i) {
    if (i == 0) return std::string("src");
    if (i == kActors - 1) return std::string("sink");
    char buf[16];
    std::snprintf(buf, sizeof buf, "b%02d", i);
    return std::string(buf);
  };
  auto skip_from = [](int i) { return i >= 1 && i <= 49 && (i - 1) % 3 == 0; };  // 1, 4, ..., 49
  for (int i = 0; i < kActors; ++i) {
    Json ports = Json::array();
    if (i > 0) ports.push_back(port("in", "input"));
    if (i >= 3 && skip_from(i - 2)) ports.push_back(port("skip_in", "input"));
    if (i < kActors - 1) ports.push_back(port("out", "output"));
    if (skip_from(i)) ports.push_back(port("skip_out", "output"));
    if (i == 0) {
      g["actors"].push_back(actor(id(i), "SPA", "source", {{"frames", frames}, {"seed", 7}}, ports));
    } else if (i == kActors - 1) {
      g["actors"].push_back(actor(id(i), "SPA", "sink", Json::object(), ports));
    } else {
      g["actors"].push_back(actor(id(i), "SPA", "busywork", {{"ms", ms}}, ports));
    }
  }
  for (int i = 0; i + 1 < kActors; ++i) {
    auto size = static_cast<std::uint32_t>(4 * (8192 - 150 * i));
    g["edges"].push_back(edge("c" + id(i), id(i), "out", id(i + 1), "in", size));
  }
  for (int i = 0; i < kActors; ++i) {
    if (skip_from(i)) g["edges"].push_back(edge("s" + id(i), id(i), "skip_out", id(i + 2), "skip_in", 256));
  }
  return g;
}

Json dpg_graph(std::uint32_t url, std::uint64_t frames, std::uint64_t seed, std::uint32_t token_size) {
  Json g = {{"name", "dpg"}, {"actors", Json::array()}, {"edges", Json::array()}};
  auto& A = g["actors"];
  auto& E = g["edges"];
  A.push_back(actor("src", "SPA", "source", {{"frames", frames}, {"seed", seed}}, {port("out", "output")}));
  A.push_back(actor("ca", "CA", "config", {{"min", 0}, {"max", url}, {"seed", seed}, {"frames", frames}},
                    {port("c_in", "output"), port("c_dpa", "output"), port("c_out", "output")}));
  A.push_back(actor("da_in", "DA", "replicate", Json::object(),
                    {port("in", "input"), port("out", "output", url, true, 0), port("ctl", "input")}));
  A.push_back(actor("dpa", "DPA", "identity", Json::object(),
                    {port("in", "input", url, true, 0), port("out", "output", url, true, 0), port("ctl", "input")}));
  A.push_back(actor("da_out", "DA", "merge", Json::object(),
                    {port("in", "input", url, true, 0), port("out", "output"), port("ctl", "input")}));
  A.push_back(actor("snk", "SPA", "sink", Json::object(), {port("in", "input")}));
  for (auto* a : {"ca", "da_in", "dpa", "da_out"}) {
    for (auto& x : A) {
      if (x["id"] == a) x["dpg"] = "g";
    }
  }
  E.push_back(edge("src_da", "src", "out", "da_in", "in", token_size));
  E.push_back(edge("da_dpa", "da_in", "out", "dpa", "in", token_size, url));
  E.push_back(edge("dpa_da", "dpa", "out", "da_out", "in", token_size, url));
  E.push_back(edge("da_snk", "da_out", "out", "snk", "in", token_size));
  for (auto [p, c] : {std::pair{"c_in", "da_in"}, {"c_dpa", "dpa"}, {"c_out", "da_out"}}) {
    Json e = edge(std::string("ctl_") + c, "ca", p, c, "ctl", 4);
    e["control"] = true;
    E.push_back(e);
  }
  g["dpgs"] = Json::array({{{"id", "g"}, {"members", {"ca", "da_in", "dpa", "da_out"}}}});
  return g;
}

std::map<std::string, Json> analyzer_fixtures() {
  std::map<std::string, Json> out;
  auto chain = [] {
    return Json{{"name", "chain"},
                {"actors", {actor("src", "SPA", "source", Json::object(), {port("out", "output")}),
                            actor("mid", "SPA", "identity", Json::object(), {port("in", "input"), port("out", "output")}),
                            actor("snk", "SPA", "sink", Json::object(), {port("in", "input")})}},
                {"edges", {edge("e1", "src", "out", "mid", "in", 16), edge("e2", "mid", "out", "snk", "in", 16)}}};
  };
  out["static_chain"] = chain();

  Json two_ca = dpg_graph(2, 1, 1);
  two_ca["actors"].push_back(actor("ca2", "CA", "config", Json::object(), {port("c", "output")}));
  two_ca["actors"].back()["dpg"] = "g";
  for (auto& a : two_ca["actors"]) {
    if (a["id"] == "da_out") a["ports"].push_back(port("ctl2", "input"));
  }
  Json ctl2 = edge("ctl2_da_out", "ca2", "c", "da_out", "ctl2", 4);
  ctl2["control"] = true;
  two_ca["edges"].push_back(ctl2);
  two_ca["dpgs"][0]["members"].push_back("ca2");
  out["two_ca"] = two_ca;

  Json stray = chain();
  stray["actors"][1]["kind"] = "DPA";
  out["stray_dpa"] = stray;

  Json asym = chain();
  asym["actors"][1]["ports"][0]["url"] = 2;
  asym["edges"][0]["capacity"] = 2;
  out["asymmetric"] = asym;

  Json overflow = chain();
  overflow["actors"][0]["ports"][0]["url"] = 2;
  overflow["actors"][1]["ports"][0]["url"] = 2;
  overflow["actors"][1]["ports"][1]["url"] = 2;
  overflow["actors"][2]["ports"][0]["url"] = 2;
  overflow["edges"][1]["capacity"] = 2;
  out["overflow"] = overflow;  // e1 keeps capacity 1 < url 2

  Json cycle = {{"name", "cycle"},
                {"actors", {actor("a", "SPA", "identity", Json::object(), {port("in", "input"), port("out", "output")}),
                            actor("b", "SPA", "identity", Json::object(), {port("in", "input"), port("out", "output")})}},
                {"edges", {edge("ab", "a", "out", "b", "in", 8), edge("ba", "b", "out", "a", "in", 8)}}};
  out["cycle"] = cycle;
  cycle["edges"][1]["initial_tokens"] = 1;
  out["cycle_primed"] = cycle;
  return out;
}

Json loopback_platform(const std::vector<std::pair<std::string, std::uint16_t>>& devices) {
  Json d = Json::array();
  Json links = Json::array();
  for (const auto& [id, base] : devices) {
    d.push_back({{"id", id}, {"units", {"cpu0"}}, {"address", "127.0.0.1:" + std::to_string(base)}});
  }
  for (std::size_t i = 0; i + 1 < devices.size(); ++i) {
    for (std::size_t j = i + 1; j < devices.size(); ++j) links.push_back({devices[i].first, devices[j].first});
  }
  return {{"devices", d}, {"links", links}};
}

Json mapping_json(const std::map<std::string, std::string>& placement) {
  Json a = Json::object();
  for (const auto& [actor_id, device] : placement) a[actor_id] = {device, "cpu0"};
  return {{"assignments", a}};
}

}  // namespace edgeprune::graphgen
