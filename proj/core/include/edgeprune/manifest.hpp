#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgeprune/graph.hpp"

namespace edgeprune {

enum class NetRole { kTx, kRx };

std::string_view to_string(NetRole role);

/// One half of a cut edge as seen by one device.
struct NetEdge {
  std::string edge;        // original edge id
  NetRole role = NetRole::kTx;
  std::string fifo_actor;  // the inserted TXF/RXF actor
  std::string peer_device;
  std::string host;        // TX: address to connect to; RX: own address
  std::uint16_t port = 0;
  std::uint16_t edge_index = 0;  // global cut-edge ordinal
  std::uint32_t token_size = 0;
  std::uint32_t lrl = 1;
  std::uint32_t url = 1;

  bool operator==(const NetEdge&) const = default;
};

inline constexpr int kManifestSchemaVersion = 1;

/// Per-device deployment produced by the compiler and interpreted by the
/// runtime. `subgraph` holds the device's actors, its local edges and the
/// device-side halves of cut edges (attached to TXF/RXF actors).
struct DeploymentManifest {
  int schema_version = kManifestSchemaVersion;
  std::string device;
  std::string graph_name;
  std::uint64_t graph_hash = 0;
  std::uint16_t base_port = 0;
  ApplicationGraph subgraph;
  std::vector<NetEdge> net_edges;
};

Json to_json(const DeploymentManifest& manifest);
DeploymentManifest manifest_from_json(const Json& doc);
std::string emit_manifest(const DeploymentManifest& manifest);
DeploymentManifest load_manifest(std::string_view text);

}  // namespace edgeprune
