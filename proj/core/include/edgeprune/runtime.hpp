#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "edgeprune/kernels.hpp"
#include "edgeprune/manifest.hpp"
#include "edgeprune/netfifo.hpp"
#include "edgeprune/stats.hpp"

namespace edgeprune {

struct RunOptions {
  /// Overrides the frame count of every source kernel.
  std::optional<std::uint64_t> frames;
  net::LinkShape shape;
  std::chrono::milliseconds connect_timeout{30000};
  /// Frames a source may have started but not yet committed on this device;
  /// 0 means unbounded (fully pipelined).
  std::size_t max_in_flight = 0;
  /// Relative kernel paths resolve against this directory.
  std::filesystem::path base_dir = ".";
  bool record_firings = true;
  /// Fault injection: edge id -> seq of a frame the TX side silently drops.
  std::map<std::string, std::uint32_t> drop_frames;
};

/// Runs one device's share of the application: binds RX listeners, connects
/// TX FIFOs, waits for the startup barrier, then runs one thread per actor
/// until end of stream. Never throws for domain failures; they are reported
/// in RunStats (ok = false, errors name the edge or actor).
RunStats run_program(const DeploymentManifest& manifest, const KernelRegistry& registry,
                     const RunOptions& options = {});

}  // namespace edgeprune
