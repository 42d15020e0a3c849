#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace edgeprune {

using Json = nlohmann::json;

enum class Direction { kInput, kOutput };

enum class ActorKind { kSPA, kDA, kCA, kDPA, kTXF, kRXF };

std::string_view to_string(Direction d);
std::string_view to_string(ActorKind k);
std::optional<ActorKind> actor_kind_from_string(std::string_view s);

/// Port id reserved for latency-feedback edges; the runtime services these
/// ports itself and kernels never see them.
inline constexpr std::string_view kFeedbackPort = "feedback";

struct PortSpec {
  std::string id;
  Direction direction = Direction::kInput;
  std::uint32_t lrl = 1;
  std::uint32_t url = 1;
  bool dynamic = false;

  bool is_feedback() const { return id == kFeedbackPort; }
};

struct PortRef {
  std::string actor;
  std::string port;

  bool operator==(const PortRef&) const = default;
};

struct ActorSpec {
  std::string id;
  ActorKind kind = ActorKind::kSPA;
  std::string kernel;
  Json kernel_params = Json::object();
  std::vector<PortSpec> ports;
  std::optional<std::string> dpg;

  const PortSpec* find_port(std::string_view port_id) const;
};

struct EdgeSpec {
  std::string id;
  PortRef producer;
  PortRef consumer;
  std::uint32_t token_size = 0;
  std::uint32_t capacity = 0;
  std::uint32_t initial_tokens = 0;
  bool control = false;
};

struct DpgSpec {
  std::string id;
  std::vector<std::string> members;
};

/// G = (A, F) plus DPG groupings. Immutable once returned by a parser.
struct ApplicationGraph {
  std::string name;
  std::vector<ActorSpec> actors;
  std::vector<EdgeSpec> edges;
  std::vector<DpgSpec> dpgs;
  std::uint64_t graph_hash = 0;

  const ActorSpec* find_actor(std::string_view id) const;
  const EdgeSpec* find_edge(std::string_view id) const;
  const DpgSpec* find_dpg(std::string_view id) const;
  /// Edge attached to the given port, if any.
  const EdgeSpec* edge_at(std::string_view actor, std::string_view port) const;
  const PortSpec& port_of(const PortRef& ref) const;
};

struct Device {
  std::string id;
  std::vector<std::string> units;
  std::string host;
  std::uint16_t base_port = 0;  // 0 when the address omits it
};

struct PlatformGraph {
  std::vector<Device> devices;
  std::vector<std::pair<std::string, std::string>> links;

  const Device* find_device(std::string_view id) const;
};

struct Placement {
  std::string device;
  std::string unit;

  bool operator==(const Placement&) const = default;
};

struct Mapping {
  std::unordered_map<std::string, Placement> assignments;

  const Placement& at(const std::string& actor) const { return assignments.at(actor); }
};

struct ParseOptions {
  /// Enforce the structural model rules R1-R5 (DPG composition, control
  /// reachability, boundary ports, symmetric rate ranges). The analyzer turns
  /// this off so it can report every violation instead of the first.
  bool check_model_rules = true;
  /// Manifests carry TXF/RXF actors and may hold a disconnected subgraph.
  bool allow_fifo_actors = false;
};

ApplicationGraph parse_application_graph(std::string_view text, const ParseOptions& options = {});
ApplicationGraph application_graph_from_json(const Json& doc, const ParseOptions& options = {});
Json to_json(const ApplicationGraph& graph);
/// Sorted-key, whitespace-free serialization hashed into graph_hash.
std::string canonical_serialization(const ApplicationGraph& graph);
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t compute_graph_hash(const ApplicationGraph& graph);
std::string hash_to_hex(std::uint64_t hash);

PlatformGraph parse_platform_graph(std::string_view text);
PlatformGraph platform_graph_from_json(const Json& doc);
Json to_json(const PlatformGraph& platform);

Mapping parse_mapping(std::string_view text, const ApplicationGraph& graph,
                      const PlatformGraph& platform);
Mapping mapping_from_json(const Json& doc, const ApplicationGraph& graph,
                          const PlatformGraph& platform);
Json to_json(const Mapping& mapping);
/// Edges whose endpoints are placed on different devices.
std::vector<const EdgeSpec*> cut_edges(const ApplicationGraph& graph, const Mapping& mapping);

struct RuleViolation {
  std::string rule;  // "R1".."R5"
  std::string element;
  std::string message;
};

/// Structural DPG and rate rules. Empty result means the graph obeys them.
std::vector<RuleViolation> check_model_rules(const ApplicationGraph& graph);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace edgeprune
