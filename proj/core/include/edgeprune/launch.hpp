#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edgeprune/netfifo.hpp"
#include "edgeprune/stats.hpp"

namespace edgeprune {

struct LaunchOptions {
  /// The edgeprune executable; each device runs `<binary> run`.
  std::filesystem::path binary;
  std::optional<std::uint64_t> frames;
  net::LinkShape shape;
  std::chrono::milliseconds connect_timeout{30000};
  std::size_t max_in_flight = 0;
};

struct LaunchReport {
  bool ok = true;
  std::vector<std::string> errors;  // each prefixed with the device id
  std::vector<RunStats> devices;

  const RunStats* find_device(std::string_view id) const;
};

/// Starts one local process per manifest in `dir` (RX-holding devices
/// first), waits for all of them and merges their stats.
LaunchReport launch(const std::filesystem::path& dir, const LaunchOptions& options);

Json to_json(const LaunchReport& report);

/// Path of the running executable.
std::filesystem::path self_executable();

}  // namespace edgeprune
