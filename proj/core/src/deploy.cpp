#include "edgeprune/deploy.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "edgeprune/analyzer.hpp"
#include "edgeprune/error.hpp"

namespace edgeprune {

std::string_view to_string(NetRole role) { return role == NetRole::kTx ? "TX" : "RX"; }

Json to_json(const DeploymentManifest& m) {
  Json net = Json::array();
  for (const auto& n : m.net_edges) {
    net.push_back({{"edge", n.edge},
                   {"role", std::string(to_string(n.role))},
                   {"fifo_actor", n.fifo_actor},
                   {"peer_device", n.peer_device},
                   {"host", n.host},
                   {"port", n.port},
                   {"edge_index", n.edge_index},
                   {"token_size", n.token_size},
                   {"lrl", n.lrl},
                   {"url", n.url}});
  }
  return {{"schema_version", m.schema_version},
          {"device", m.device},
          {"graph_name", m.graph_name},
          {"graph_hash", hash_to_hex(m.graph_hash)},
          {"base_port", m.base_port},
          {"subgraph", to_json(m.subgraph)},
          {"net_edges", net}};
}

DeploymentManifest manifest_from_json(const Json& doc) {
  try {
    DeploymentManifest m;
    if (!doc.is_object()) throw ParseError("manifest: expected an object", 0);
    m.schema_version = doc.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
      throw ParseError("manifest: unsupported schema_version " + std::to_string(m.schema_version), 0);
    }
    m.device = doc.at("device").get<std::string>();
    m.graph_name = doc.at("graph_name").get<std::string>();
    std::string hex = doc.at("graph_hash").get<std::string>();
    if (hex.size() != 16 || hex.find_first_not_of("0123456789abcdef") != std::string::npos) {
      throw ParseError("manifest: graph_hash must be 16 lowercase hex digits", 0);
    }
    m.graph_hash = std::stoull(hex, nullptr, 16);
    m.base_port = doc.at("base_port").get<std::uint16_t>();
    ParseOptions opts;
    opts.check_model_rules = false;
    opts.allow_fifo_actors = true;
    m.subgraph = application_graph_from_json(doc.at("subgraph"), opts);
    for (const auto& n : doc.at("net_edges")) {
      NetEdge e;
      e.edge = n.at("edge").get<std::string>();
      std::string role = n.at("role").get<std::string>();
      if (role != "TX" && role != "RX") throw ParseError("manifest: role must be TX or RX", 0);
      e.role = role == "TX" ? NetRole::kTx : NetRole::kRx;
      e.fifo_actor = n.at("fifo_actor").get<std::string>();
      e.peer_device = n.at("peer_device").get<std::string>();
      e.host = n.at("host").get<std::string>();
      e.port = n.at("port").get<std::uint16_t>();
      e.edge_index = n.at("edge_index").get<std::uint16_t>();
      e.token_size = n.at("token_size").get<std::uint32_t>();
      e.lrl = n.at("lrl").get<std::uint32_t>();
      e.url = n.at("url").get<std::uint32_t>();
      const ActorSpec* a = m.subgraph.find_actor(e.fifo_actor);
      ActorKind want = e.role == NetRole::kTx ? ActorKind::kTXF : ActorKind::kRXF;
      if (a == nullptr || a->kind != want) {
        throw ParseError("manifest: net edge " + e.edge + " names no matching FIFO actor", 0);
      }
      m.net_edges.push_back(std::move(e));
    }
    return m;
  } catch (const Error&) {
    throw;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0);
  }
}

std::string emit_manifest(const DeploymentManifest& m) { return to_json(m).dump(2) + "\n"; }

DeploymentManifest load_manifest(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what(), e.byte);
  }
  return manifest_from_json(doc);
}

std::vector<DeploymentManifest> partition(const ApplicationGraph& graph, const PlatformGraph& platform,
                                          const Mapping& mapping, const CompileOptions& options) {
  if (options.require_consistent) {
    auto report = analyzer::analyze(graph);
    if (!report.consistent) {
      const auto& d = report.diagnostics.front();
      throw ValidationError(d.rule, d.element, "graph is inconsistent: " + d.message);
    }
  }
  for (const auto& a : graph.actors) {
    if (!mapping.assignments.contains(a.id)) throw ValidationError("mapping", a.id, "unmapped actor " + a.id);
  }
  for (const auto& dpg : graph.dpgs) {
    std::set<std::string> devices;
    for (const auto& m : dpg.members) devices.insert(mapping.at(m).device);
    if (devices.size() > 1) {
      throw ValidationError("mapping", dpg.id, "dpg " + dpg.id + " spans more than one device");
    }
  }

  auto base_of = [&](const Device& d) -> std::uint32_t {
    if (options.base_port) return *options.base_port;
    return d.base_port != 0 ? d.base_port : options.default_base_port;
  };

  auto cuts = cut_edges(graph, mapping);
  std::map<std::string, std::uint16_t> ordinal;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const EdgeSpec& e = *cuts[i];
    if (e.control) throw ValidationError("mapping", e.id, "control edge " + e.id + " crosses devices");
    if (graph.port_of(e.producer).dynamic || graph.port_of(e.consumer).dynamic) {
      throw ValidationError("mapping", e.id, "dynamic-rate edge " + e.id + " crosses devices");
    }
    ordinal[e.id] = static_cast<std::uint16_t>(i);
  }

  std::vector<DeploymentManifest> out;
  for (const auto& dev : platform.devices) {
    DeploymentManifest m;
    m.device = dev.id;
    m.graph_name = graph.name;
    m.graph_hash = graph.graph_hash;
    m.base_port = static_cast<std::uint16_t>(base_of(dev));
    m.subgraph.name = graph.name;
    auto here = [&](const std::string& actor) { return mapping.at(actor).device == dev.id; };
    for (const auto& a : graph.actors) {
      if (here(a.id)) m.subgraph.actors.push_back(a);
    }
    if (m.subgraph.actors.empty()) continue;
    for (const auto& d : graph.dpgs) {
      if (here(d.members.front())) m.subgraph.dpgs.push_back(d);
    }
    for (const auto& e : graph.edges) {
      bool p = here(e.producer.actor);
      bool c = here(e.consumer.actor);
      if (p && c) {
        m.subgraph.edges.push_back(e);
        continue;
      }
      if (!p && !c) continue;
      const PortSpec& port = graph.port_of(e.producer);
      const Device* peer = platform.find_device(mapping.at(p ? e.consumer.actor : e.producer.actor).device);
      const Device* consumer_dev = p ? peer : &dev;
      std::uint32_t port_no = base_of(*consumer_dev) + ordinal.at(e.id);
      if (port_no > 65535) throw ValidationError("ports", e.id, "port for edge " + e.id + " exceeds 65535");

      NetEdge ne;
      ne.edge = e.id;
      ne.role = p ? NetRole::kTx : NetRole::kRx;
      ne.fifo_actor = (p ? "tx." : "rx.") + e.id;
      ne.peer_device = peer->id;
      ne.host = consumer_dev->host;
      ne.port = static_cast<std::uint16_t>(port_no);
      ne.edge_index = ordinal.at(e.id);
      ne.token_size = e.token_size;
      ne.lrl = port.lrl;
      ne.url = port.url;
      if (graph.find_actor(ne.fifo_actor) != nullptr) {
        throw ValidationError("unique", ne.fifo_actor, "actor id " + ne.fifo_actor + " is reserved for a FIFO");
      }

      ActorSpec fifo;
      fifo.id = ne.fifo_actor;
      fifo.kind = p ? ActorKind::kTXF : ActorKind::kRXF;
      fifo.ports.push_back({p ? "in" : "out", p ? Direction::kInput : Direction::kOutput, port.lrl, port.url, false});
      EdgeSpec half = e;
      if (p) {
        half.consumer = {fifo.id, "in"};
        half.initial_tokens = 0;
      } else {
        half.producer = {fifo.id, "out"};
      }
      m.subgraph.actors.push_back(std::move(fifo));
      m.subgraph.edges.push_back(std::move(half));
      m.net_edges.push_back(std::move(ne));
    }
    m.subgraph.graph_hash = compute_graph_hash(m.subgraph);
    out.push_back(std::move(m));
  }
  return out;
}

ApplicationGraph add_latency_feedback(const ApplicationGraph& graph, const std::string& from,
                                      const std::string& to) {
  ApplicationGraph g = graph;
  auto add_port = [&](const std::string& actor, Direction dir) {
    auto it = std::find_if(g.actors.begin(), g.actors.end(), [&](const ActorSpec& a) { return a.id == actor; });
    if (it == g.actors.end()) throw ValidationError("feedback", actor, "unknown actor " + actor);
    if (it->find_port(kFeedbackPort) != nullptr) {
      throw ValidationError("feedback", actor, "actor " + actor + " already has a feedback port");
    }
    it->ports.push_back({std::string(kFeedbackPort), dir, 1, 1, false});
  };
  if (g.find_edge("feedback") != nullptr) throw ValidationError("feedback", "feedback", "edge feedback exists");
  add_port(from, Direction::kOutput);
  add_port(to, Direction::kInput);
  EdgeSpec e;
  e.id = "feedback";
  e.producer = {from, std::string(kFeedbackPort)};
  e.consumer = {to, std::string(kFeedbackPort)};
  e.token_size = 4;
  e.capacity = 1;
  e.initial_tokens = 1;
  g.edges.push_back(std::move(e));
  g.graph_hash = compute_graph_hash(g);
  return g;
}

Json write_deployment(const std::filesystem::path& dir, const std::vector<DeploymentManifest>& manifests) {
  std::filesystem::create_directories(dir);
  Json devices = Json::array();
  for (const auto& m : manifests) {
    std::string file = "manifest." + m.device + ".json";
    write_text_file((dir / file).string(), emit_manifest(m));
    bool server = std::any_of(m.net_edges.begin(), m.net_edges.end(),
                              [](const NetEdge& n) { return n.role == NetRole::kRx; });
    std::string host = "127.0.0.1";
    for (const auto& n : m.net_edges) {
      if (n.role == NetRole::kRx) host = n.host;
    }
    devices.push_back({{"device", m.device}, {"manifest", file}, {"host", host}, {"server", server}});
  }
  Json plan = {{"schema_version", kManifestSchemaVersion},
               {"graph_name", manifests.empty() ? "" : manifests.front().graph_name},
               {"graph_hash", manifests.empty() ? "" : hash_to_hex(manifests.front().graph_hash)},
               {"devices", devices}};
  write_text_file((dir / "launch.json").string(), plan.dump(2) + "\n");
  return plan;
}

std::vector<LaunchEntry> read_launch_plan(const std::filesystem::path& dir) {
  Json plan;
  std::string text = read_text_file((dir / "launch.json").string());
  try {
    plan = Json::parse(text);
    std::vector<LaunchEntry> out;
    for (const auto& d : plan.at("devices")) {
      out.push_back({d.at("device").get<std::string>(), d.at("host").get<std::string>(),
                     dir / d.at("manifest").get<std::string>(), d.at("server").get<bool>()});
    }
    return out;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("launch.json: ") + e.what(), 0);
  }
}

}  // namespace edgeprune
