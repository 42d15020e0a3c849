#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgeprune/deploy.hpp"
#include "edgeprune/graph.hpp"
#include "edgeprune/netfifo.hpp"
#include "edgeprune/stats.hpp"

namespace edgeprune::explorer {

/// Actors in precedence order: topological over data edges, ties broken by
/// declaration order, each DPG kept contiguous at its entry DA's position.
struct PrecedenceIndex {
  std::vector<std::string> order;

  std::size_t size() const { return order.size(); }
  std::size_t index_of(std::string_view actor) const;
};

/// Throws ValidationError on a data-edge cycle. Control edges and
/// latency-feedback edges do not constrain the order.
PrecedenceIndex precedence_index(const ApplicationGraph& graph);

struct CrossingEdge {
  std::string edge;
  std::uint32_t token_size = 0;
  std::uint64_t bytes = 0;  // token_size * url
};

/// PP k places the first k actors on the client. k == N is the all-local run.
struct PartitionPoint {
  std::size_t k = 0;
  std::vector<std::string> client_actors;
  std::vector<std::string> server_actors;
  std::vector<CrossingEdge> crossing;
  std::uint64_t crossing_bytes = 0;

  bool local() const { return server_actors.empty(); }
};

/// `pinned` actors stay on the server whatever k is.
PartitionPoint partition_point(const ApplicationGraph& graph, const PrecedenceIndex& index, std::size_t k,
                               const std::vector<std::string>& pinned = {});

struct MappingPair {
  PartitionPoint pp;
  Mapping mapping;
};

struct GenerateOptions {
  /// Keep actors without data outputs on the server.
  bool pin_sinks = false;
};

/// One mapping per PP 1..N-1, each placing actors on the first unit of the
/// client or server device.
std::vector<MappingPair> generate_mappings(const ApplicationGraph& graph, const PlatformGraph& platform,
                                           const std::string& client, const std::string& server,
                                           const GenerateOptions& options = {});

/// Placement of every actor on one device (the all-local baseline).
Mapping local_mapping(const ApplicationGraph& graph, const PlatformGraph& platform, const std::string& device);

using ComputeTimes = std::map<std::string, double>;

/// Per-actor milliseconds from busywork parameters (busywork kernel, busywork
/// layers of a sequence). source and sink count as 0; other actors are left
/// out because their cost is not declared.
ComputeTimes declared_compute_ms(const ApplicationGraph& graph);

/// Mean busy time per firing of every actor in `stats`.
ComputeTimes measured_compute_ms(const std::vector<RunStats>& stats);

struct Prediction {
  double endpoint_ms = 0.0;
  double transfer_ms = 0.0;
  double server_ms = 0.0;
  double end_to_end_ms = 0.0;
};

/// endpoint = client compute + crossing_bytes / bandwidth + latency (the
/// transfer terms vanish for an all-local point). Throws when an actor has no
/// compute time.
Prediction predict_time(const PartitionPoint& pp, const ComputeTimes& compute, const net::LinkShape& link,
                        bool feedback = false);

struct SweepOptions {
  std::string client;
  std::string server;
  std::uint64_t frames = 10;
  std::uint64_t warmup = 3;
  net::LinkShape shape;
  /// Range the chosen PP is taken from; every PP is still swept.
  std::size_t pp_min = 1;
  std::optional<std::size_t> pp_max;
  bool predict_only = false;
  bool pin_sinks = false;
  std::filesystem::path work_dir;
  std::filesystem::path binary;
  std::optional<std::uint16_t> base_port;
  /// For devices whose address carries no port.
  std::uint16_t default_base_port = kDefaultBasePort;
  std::chrono::milliseconds connect_timeout{30000};
};

struct ProfileRow {
  std::optional<std::size_t> pp;  // empty for the all-local baseline
  std::size_t client_actors = 0;
  std::uint64_t crossing_bytes = 0;
  std::string status;  // ok, failed, predicted
  Summary measured;
  std::optional<double> predicted_ms;
  std::string error;
};

struct ProfileReport {
  std::vector<ProfileRow> rows;
  std::optional<std::size_t> chosen_pp;
  net::LinkShape shape;

  const ProfileRow* row(std::size_t pp) const;
  const ProfileRow* baseline() const;
};

/// Per-frame endpoint times (ms) of frames at index >= warmup.
std::vector<double> endpoint_times(const RunStats& client, std::uint64_t warmup);

/// Runs every PP (then the all-local baseline) as a live loopback deployment
/// with one frame in flight, one deployment at a time.
ProfileReport sweep(const ApplicationGraph& graph, const PlatformGraph& platform, const SweepOptions& options);

/// `pp,client_actors,crossing_bytes,mean_ms,median_ms,p95_ms,predicted_ms,status`
/// with the baseline as pp `local`.
std::string report_csv(const ProfileReport& report);

}  // namespace edgeprune::explorer
