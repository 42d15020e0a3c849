#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "edgeprune/graph.hpp"

namespace edgeprune::analyzer {

enum class Severity { kError, kWarning };

struct Diagnostic {
  std::string rule;  // R1..R5, CAPACITY, DEADLOCK
  Severity severity = Severity::kError;
  std::string element;
  std::string message;
};

/// atr per edge id for one graph iteration.
using RateAssignment = std::map<std::string, std::uint32_t>;

struct Completed {
  std::vector<std::string> firing_order;
};

struct Deadlock {
  std::vector<std::string> firing_order;
  std::vector<std::string> blocked;  // actors that never fired
  std::map<std::string, std::uint32_t> tokens;  // per-edge occupancy when stuck
};

using ScheduleResult = std::variant<Completed, Deadlock>;

struct AnalysisReport {
  bool consistent = true;
  std::vector<Diagnostic> diagnostics;
  std::uint64_t checked_assignments = 0;
  std::optional<std::pair<RateAssignment, Deadlock>> deadlock_witness;
};

std::vector<Diagnostic> check_structure(const ApplicationGraph& graph);
std::vector<Diagnostic> check_capacities(const ApplicationGraph& graph);

/// Throws ValidationError when `rates` misses an edge or leaves [lrl, url].
ScheduleResult simulate_schedule(const ApplicationGraph& graph, const RateAssignment& rates);

/// Boundary assignments analyze() simulates: per dynamic edge {lrl, url} plus a
/// 0-skip candidate when lrl = 0; full product up to kMaxExhaustive, otherwise
/// corners plus kRandomSamples seeded draws.
inline constexpr std::uint64_t kMaxExhaustive = 4096;
inline constexpr std::uint64_t kRandomSamples = 1024;
std::vector<RateAssignment> boundary_assignments(const ApplicationGraph& graph,
                                                 std::uint64_t seed = 0x5eed);

AnalysisReport analyze(const ApplicationGraph& graph, std::uint64_t seed = 0x5eed);

std::string_view to_string(Severity s);
Json to_json(const AnalysisReport& report);

}  // namespace edgeprune::analyzer
