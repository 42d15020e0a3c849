#include "edgeprune/launch.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <sstream>

#include "edgeprune/deploy.hpp"
#include "edgeprune/error.hpp"

extern char** environ;

namespace edgeprune {

namespace {

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

pid_t spawn(const std::vector<std::string>& args, const std::filesystem::path& log) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw Error("cannot start " + args[0] + ": " + std::strerror(rc));
  return pid;
}

std::string tail(const std::filesystem::path& file, std::size_t max_lines = 5) {
  std::string text;
  try {
    text = read_text_file(file.string());
  } catch (const Error&) {
    return {};
  }
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  std::string out;
  for (std::size_t i = lines.size() > max_lines ? lines.size() - max_lines : 0; i < lines.size(); ++i) {
    out += (out.empty() ? "" : " | ") + lines[i];
  }
  return out;
}

}  // namespace

const RunStats* LaunchReport::find_device(std::string_view id) const {
  for (const auto& d : devices) {
    if (d.device == id) return &d;
  }
  return nullptr;
}

std::filesystem::path self_executable() { return std::filesystem::read_symlink("/proc/self/exe"); }

LaunchReport launch(const std::filesystem::path& dir, const LaunchOptions& options) {
  auto plan = read_launch_plan(dir);
  std::stable_sort(plan.begin(), plan.end(),
                   [](const LaunchEntry& a, const LaunchEntry& b) { return a.server && !b.server; });

  struct Child {
    LaunchEntry entry;
    pid_t pid;
    std::filesystem::path stats;
    std::filesystem::path log;
  };
  std::vector<Child> children;
  LaunchReport report;
  for (const auto& e : plan) {
    std::filesystem::path stats = dir / ("stats." + e.device + ".json");
    std::filesystem::path log = dir / ("log." + e.device + ".txt");
    std::filesystem::remove(stats);
    std::vector<std::string> args{options.binary.string(), "run", "-M", e.manifest.string(), "--stats",
                                  stats.string(),
                                  "--connect-timeout", std::to_string(options.connect_timeout.count()),
                                  "--max-in-flight", std::to_string(options.max_in_flight)};
    if (options.frames) {
      args.push_back("--frames");
      args.push_back(std::to_string(*options.frames));
    }
    if (options.shape.bandwidth > 0) {
      args.push_back("--shape-bw");
      args.push_back(format_double(options.shape.bandwidth));
    }
    if (options.shape.latency_ms > 0) {
      args.push_back("--shape-lat");
      args.push_back(format_double(options.shape.latency_ms));
    }
    try {
      children.push_back({e, spawn(args, log), stats, log});
    } catch (const Error& err) {
      report.ok = false;
      report.errors.push_back(e.device + ": " + err.what());
    }
  }

  for (auto& c : children) {
    int status = 0;
    while (waitpid(c.pid, &status, 0) < 0 && errno == EINTR) {
    }
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    std::optional<RunStats> stats;
    try {
      stats = run_stats_from_json(Json::parse(read_text_file(c.stats.string())));
    } catch (const std::exception&) {
    }
    bool explained = stats && !stats->errors.empty();
    if (stats) {
      for (const auto& err : stats->errors) report.errors.push_back(c.entry.device + ": " + err);
      report.devices.push_back(std::move(*stats));
    }
    if (code != 0) {
      report.ok = false;
      if (!explained) {
        report.errors.push_back(c.entry.device + ": exited with code " + std::to_string(code) +
                                (tail(c.log).empty() ? "" : ": " + tail(c.log)));
      }
    }
  }
  if (!report.errors.empty()) report.ok = false;
  return report;
}

Json to_json(const LaunchReport& report) {
  Json devices = Json::array();
  for (const auto& d : report.devices) devices.push_back(to_json(d));
  return {{"ok", report.ok}, {"errors", report.errors}, {"devices", devices}};
}

}  // namespace edgeprune
