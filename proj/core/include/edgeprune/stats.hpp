#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgeprune/graph.hpp"

namespace edgeprune {

/// Timestamps are microseconds on the host's monotonic clock, which is shared
/// by every process on the machine; loopback deployments can therefore
/// subtract timestamps taken in different processes.
using Micros = std::int64_t;

struct FiringRecord {
  std::uint64_t frame = 0;
  Micros start = 0;
  Micros end = 0;
};

struct ActorStats {
  std::string id;
  std::string kind;
  std::uint64_t firings = 0;
  std::uint64_t skipped = 0;  // all dynamic rates were 0
  double busy_ms = 0.0;
  std::vector<FiringRecord> log;
};

struct EdgeStats {
  std::string id;
  std::uint64_t produced = 0;
  std::uint64_t consumed = 0;
  std::uint64_t drained = 0;
  std::uint64_t discarded_partial = 0;
  std::uint64_t peak_occupancy = 0;
  std::uint64_t capacity = 0;
  std::uint64_t initial_tokens = 0;
};

struct FrameTiming {
  std::uint64_t index = 0;
  std::optional<Micros> acquired;   // a source started the frame
  std::optional<Micros> committed;  // every terminal (TX FIFO or sink) finished it
  std::optional<Micros> feedback;   // latency-feedback token for it arrived

  std::optional<double> endpoint_ms() const;
  std::optional<double> end_to_end_ms() const;
};

struct SendTiming {
  std::uint32_t seq = 0;
  std::uint64_t bytes = 0;
  Micros ready = 0;
  Micros start = 0;
  Micros end = 0;
};

struct NetStats {
  std::string edge;
  std::string role;
  std::uint16_t port = 0;
  std::uint64_t frames = 0;
  std::uint64_t bytes = 0;
  std::vector<SendTiming> sends;
  std::vector<std::pair<std::uint32_t, Micros>> receives;
};

struct RunStats {
  std::string device;
  bool ok = true;
  std::vector<std::string> errors;
  std::uint64_t frames_processed = 0;
  std::uint64_t rate_violations = 0;
  Micros started = 0;
  Micros finished = 0;
  std::vector<ActorStats> actors;
  std::vector<EdgeStats> edges;
  std::vector<FrameTiming> frames;
  std::vector<NetStats> net;

  const ActorStats* find_actor(std::string_view id) const;
  const EdgeStats* find_edge(std::string_view id) const;
  const NetStats* find_net(std::string_view edge) const;
  double wall_ms() const { return static_cast<double>(finished - started) / 1000.0; }
};

Json to_json(const RunStats& stats);
RunStats run_stats_from_json(const Json& doc);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
};

/// Mean, median and nearest-rank p95 of `values`.
Summary summarize(std::vector<double> values);

}  // namespace edgeprune
