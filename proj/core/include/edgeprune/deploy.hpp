#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edgeprune/graph.hpp"
#include "edgeprune/manifest.hpp"

namespace edgeprune {

inline constexpr std::uint16_t kDefaultBasePort = 7100;

struct CompileOptions {
  /// Replaces every device's base port when set.
  std::optional<std::uint16_t> base_port;
  /// Used for devices whose address carries no port.
  std::uint16_t default_base_port = kDefaultBasePort;
  /// Refuse graphs the analyzer does not find consistent.
  bool require_consistent = true;
};

/// Splits `graph` per `mapping` into one manifest per device that hosts at
/// least one actor, in platform declaration order. Each cut edge becomes a
/// TXF actor "tx.<edge>" on the producer side and an RXF actor "rx.<edge>" on
/// the consumer side; both halves keep the edge id. Cut edges are numbered by
/// sorted edge id and listen on consumer base port + ordinal.
std::vector<DeploymentManifest> partition(const ApplicationGraph& graph, const PlatformGraph& platform,
                                          const Mapping& mapping, const CompileOptions& options = {});

/// Adds a 4-byte latency-feedback edge "feedback" from `from` (normally the
/// final actor) back to `to` (normally the source) with one initial token.
/// Both ends get a port named "feedback"; the runtime services it.
ApplicationGraph add_latency_feedback(const ApplicationGraph& graph, const std::string& from,
                                      const std::string& to);

/// Writes manifest.<device>.json for each manifest plus launch.json into
/// `dir`. Returns the launch plan document.
Json write_deployment(const std::filesystem::path& dir, const std::vector<DeploymentManifest>& manifests);

struct LaunchEntry {
  std::string device;
  std::string host;
  std::filesystem::path manifest;
  bool server = false;  // hosts at least one RX FIFO; started first
};

std::vector<LaunchEntry> read_launch_plan(const std::filesystem::path& dir);

}  // namespace edgeprune
