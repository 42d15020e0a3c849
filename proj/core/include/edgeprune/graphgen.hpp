#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "edgeprune/graph.hpp"

namespace edgeprune::graphgen {

/// Input 96x96x3 -> L1 (conv5x5x32, pool, relu) -> L2 (same) -> L3 (dense 256,
/// relu) -> L4L5 (dense 64, relu, dense 4, softmax). L4L5 writes its 16-byte
/// class vector per frame to `output_path`.
struct VehicleOptions {
  std::uint64_t frames = 32;
  std::uint64_t seed = 1;
  std::string output_path = "vehicle_out.bin";
};

Json vehicle_graph(const VehicleOptions& options = {});

/// Token sizes on Input->L1, L1->L2, L2->L3, L3->L4L5.
inline constexpr std::uint32_t kVehicleTokens[4] = {110592, 294912, 73728, 1024};

/// Same topology and token sizes as the vehicle graph, but every actor is
/// busywork taking ms[i] per firing (ms[0] belongs to the source and must be 0).
Json busywork_vehicle_graph(const std::vector<double>& ms, std::uint64_t frames = 13);

/// The calibration profile: Input 0, L1 6.5u, L2 5.0u, L3 6.4u, L4L5 1.0u.
Json dcal_graph(double unit_ms = 10.0, std::uint64_t frames = 13);
std::vector<double> dcal_ms(double unit_ms = 10.0);

/// Two vehicle front ends (Input_x, L1_x, L2_x, L3_x for x in a, b) joined
/// by a two-input L4L5.
Json dual_input_graph(const VehicleOptions& options = {});

/// 53 actors (source, 51 busywork, sink) and 69 edges: a 52-edge chain with
/// declining token sizes plus 17 skip edges i -> i+2.
Json deep_chain_graph(double ms_per_actor = 0.0, std::uint64_t frames = 4);

/// src -> DA(replicate) -> DPA(identity) -> DA(merge) -> sink with a CA
/// drawing each iteration's atr uniformly from [0, url].
Json dpg_graph(std::uint32_t url, std::uint64_t frames, std::uint64_t seed, std::uint32_t token_size = 8);

/// Analyzer fixtures keyed by name: static_chain, two_ca, stray_dpa,
/// asymmetric, overflow, cycle, cycle_primed.
std::map<std::string, Json> analyzer_fixtures();

/// Loopback devices with one unit "cpu0" each.
Json loopback_platform(const std::vector<std::pair<std::string, std::uint16_t>>& devices);

/// Mapping document placing each actor (id -> device) on unit cpu0.
Json mapping_json(const std::map<std::string, std::string>& placement);

}  // namespace edgeprune::graphgen
