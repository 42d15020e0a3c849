#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "edgeprune/analyzer.hpp"
#include "edgeprune/deploy.hpp"
#include "edgeprune/error.hpp"
#include "edgeprune/explorer.hpp"
#include "edgeprune/launch.hpp"
#include "edgeprune/runtime.hpp"

namespace fs = std::filesystem;
using namespace edgeprune;

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

struct Global {
  std::string log_level = "warn";
  std::optional<std::uint16_t> base_port;  // flag, then EDGEPRUNE_BASE_PORT
  std::uint64_t connect_timeout_ms = 30000;
  double shape_bw = 0.0;
  double shape_lat = 0.0;
  std::uint64_t seed = 0x5eed;
};

std::uint16_t resolve_base_port(const Global& g) {
  if (g.base_port) return *g.base_port;
  if (const char* env = std::getenv("EDGEPRUNE_BASE_PORT")) {
    try {
      unsigned long v = std::stoul(env);
      if (v > 0 && v <= 65535) return static_cast<std::uint16_t>(v);
    } catch (const std::exception&) {
    }
    spdlog::warn("ignoring EDGEPRUNE_BASE_PORT={}", env);
  }
  return kDefaultBasePort;
}

net::LinkShape shape_of(const Global& g) { return {g.shape_bw, g.shape_lat}; }

ApplicationGraph load_graph(const std::string& path, const ParseOptions& options = {}) {
  return parse_application_graph(read_text_file(path), options);
}

void add_shape_options(CLI::App* cmd, Global& g) {
  cmd->add_option("--shape-bw", g.shape_bw, "Emulated link bandwidth in bytes/s (0 = unshaped)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--shape-lat", g.shape_lat, "Emulated one-way latency in ms")->check(CLI::NonNegativeNumber);
}

int cmd_analyze(const std::string& graph_path, bool quiet, std::uint64_t seed) {
  ParseOptions lenient;
  lenient.check_model_rules = false;
  auto report = analyzer::analyze(load_graph(graph_path, lenient), seed);
  for (const auto& d : report.diagnostics) {
    std::cerr << analyzer::to_string(d.severity) << " [" << d.rule << "] " << d.element << ": " << d.message
              << "\n";
  }
  if (!quiet) std::cout << analyzer::to_json(report).dump(2) << "\n";
  return report.consistent ? kOk : kDomainError;
}

struct CompileArgs {
  std::string graph, platform, mapping, out;
  bool feedback = false;
  std::string feedback_from, feedback_to;
};

int cmd_compile(const CompileArgs& a, const Global& g) {
  auto graph = load_graph(a.graph);
  auto platform = parse_platform_graph(read_text_file(a.platform));
  auto mapping = parse_mapping(read_text_file(a.mapping), graph, platform);
  if (a.feedback) {
    auto index = explorer::precedence_index(graph);
    std::string from = a.feedback_from.empty() ? index.order.back() : a.feedback_from;
    std::string to = a.feedback_to.empty() ? index.order.front() : a.feedback_to;
    graph = add_latency_feedback(graph, from, to);
  }
  CompileOptions options;
  if (g.base_port) {
    options.base_port = g.base_port;
  } else {
    options.default_base_port = resolve_base_port(g);
  }
  auto manifests = partition(graph, platform, mapping, options);
  write_deployment(a.out, manifests);
  for (const auto& m : manifests) {
    spdlog::info("device {}: {} actors, {} network FIFOs", m.device, m.subgraph.actors.size(), m.net_edges.size());
    for (const auto& n : m.net_edges) {
      std::cout << m.device << " " << to_string(n.role) << " " << n.edge << " port " << n.port << "\n";
    }
  }
  std::cout << "wrote " << manifests.size() << " manifest(s) to " << a.out << "\n";
  return kOk;
}

int cmd_launch(const std::string& dir, std::optional<std::uint64_t> frames, std::size_t max_in_flight,
               const std::string& report_path, const Global& g) {
  LaunchOptions options;
  options.binary = self_executable();
  options.frames = frames;
  options.shape = shape_of(g);
  options.connect_timeout = std::chrono::milliseconds(g.connect_timeout_ms);
  options.max_in_flight = max_in_flight;
  auto report = launch(dir, options);
  Json doc = to_json(report);
  if (!report_path.empty()) write_text_file(report_path, doc.dump(2) + "\n");
  for (const auto& d : report.devices) {
    std::cout << d.device << ": " << (d.ok ? "ok" : "failed") << ", " << d.frames_processed << " frames, "
              << d.wall_ms() << " ms\n";
  }
  for (const auto& e : report.errors) std::cerr << "error: " << e << "\n";
  return report.ok ? kOk : kDomainError;
}

struct RunArgs {
  std::string manifest;
  std::string stats;
  std::optional<std::uint64_t> frames;
  std::size_t max_in_flight = 0;
  std::vector<std::string> drops;
};

int cmd_run(const RunArgs& a, const Global& g) {
  auto manifest = load_manifest(read_text_file(a.manifest));
  RunOptions options;
  options.frames = a.frames;
  options.shape = shape_of(g);
  options.connect_timeout = std::chrono::milliseconds(g.connect_timeout_ms);
  options.max_in_flight = a.max_in_flight;
  options.base_dir = fs::absolute(a.manifest).parent_path();
  for (const auto& d : a.drops) {
    auto colon = d.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--inject-drop", "expected EDGE:SEQ");
    options.drop_frames[d.substr(0, colon)] = static_cast<std::uint32_t>(std::stoul(d.substr(colon + 1)));
  }
  spdlog::info("device {}: starting ({} net edges)", manifest.device, manifest.net_edges.size());
  auto stats = run_program(manifest, default_registry(), options);
  if (!a.stats.empty()) write_text_file(a.stats, to_json(stats).dump() + "\n");
  for (const auto& e : stats.errors) std::cerr << "error: device " << manifest.device << ": " << e << "\n";
  spdlog::info("device {}: {} frames in {:.1f} ms", manifest.device, stats.frames_processed, stats.wall_ms());
  return stats.ok ? kOk : kDomainError;
}

struct ExploreArgs {
  std::string graph, platform, client, server, out, work_dir;
  std::uint64_t frames = 10;
  std::uint64_t warmup = 3;
  std::size_t pp_min = 1;
  std::optional<std::size_t> pp_max;
  bool predict_only = false;
  bool pin_sinks = false;
};

int cmd_explore(const ExploreArgs& a, const Global& g) {
  auto graph = load_graph(a.graph);
  auto platform = parse_platform_graph(read_text_file(a.platform));
  if (!analyzer::analyze(graph).consistent) throw Error("graph is inconsistent; run analyze for details");
  explorer::SweepOptions options;
  options.client = a.client;
  options.server = a.server;
  options.frames = a.frames;
  options.warmup = a.warmup;
  options.shape = shape_of(g);
  options.pp_min = a.pp_min;
  options.pp_max = a.pp_max;
  options.predict_only = a.predict_only;
  options.pin_sinks = a.pin_sinks;
  options.binary = self_executable();
  options.work_dir = a.work_dir.empty() ? fs::temp_directory_path() / ("edgeprune-sweep-" + std::to_string(getpid()))
                                        : fs::path(a.work_dir);
  options.base_port = g.base_port;
  options.default_base_port = resolve_base_port(g);
  options.connect_timeout = std::chrono::milliseconds(g.connect_timeout_ms);
  auto report = explorer::sweep(graph, platform, options);
  std::string csv = explorer::report_csv(report);
  if (a.out.empty() || a.out == "-") {
    std::cout << csv;
  } else {
    write_text_file(a.out, csv);
  }
  for (const auto& r : report.rows) {
    if (r.status == "failed") {
      std::cerr << "PP " << (r.pp ? std::to_string(*r.pp) : "local") << " failed: " << r.error << "\n";
    }
  }
  if (report.chosen_pp) std::cerr << "chosen PP: " << *report.chosen_pp << "\n";
  if (a.work_dir.empty()) fs::remove_all(options.work_dir);
  return report.chosen_pp ? kOk : kDomainError;
}

int cmd_predict(const std::string& graph_path, std::optional<std::size_t> pp, bool feedback, const Global& g) {
  auto graph = load_graph(graph_path);
  auto index = explorer::precedence_index(graph);
  auto compute = explorer::declared_compute_ms(graph);
  std::cout << "pp,client_actors,crossing_bytes,endpoint_ms,transfer_ms,end_to_end_ms\n";
  for (std::size_t k = 1; k <= index.size(); ++k) {
    if (pp && *pp != k) continue;
    auto point = explorer::partition_point(graph, index, k);
    auto p = explorer::predict_time(point, compute, shape_of(g), feedback);
    std::cout << (point.local() ? std::string("local") : std::to_string(k)) << ',' << point.client_actors.size()
              << ',' << point.crossing_bytes << ',' << p.endpoint_ms << ',' << p.transfer_ms << ','
              << p.end_to_end_ms << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed dataflow inference: analyze, compile, launch, run, explore, predict"};
  app.require_subcommand(1);
  Global g;
  if (const char* env = std::getenv("EDGEPRUNE_LOG")) g.log_level = env;
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off (env EDGEPRUNE_LOG)");
  app.add_option("--base-port", g.base_port, "First TCP port per device (env EDGEPRUNE_BASE_PORT, default 7100)");
  app.add_option("--connect-timeout", g.connect_timeout_ms, "Startup barrier timeout in ms")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for sampled rate assignments")->capture_default_str();

  std::string graph_path;
  bool quiet = false;
  auto* analyze = app.add_subcommand("analyze", "Check a graph for consistency");
  analyze->add_option("-g,--graph", graph_path, "Application graph")->required()->check(CLI::ExistingFile);
  analyze->add_flag("-q,--quiet", quiet, "Only diagnostics and exit code");

  CompileArgs ca;
  auto* compile = app.add_subcommand("compile", "Partition a graph into per-device manifests");
  compile->add_option("-g,--graph", ca.graph)->required()->check(CLI::ExistingFile);
  compile->add_option("-p,--platform", ca.platform)->required()->check(CLI::ExistingFile);
  compile->add_option("-m,--mapping", ca.mapping)->required()->check(CLI::ExistingFile);
  compile->add_option("-o,--out", ca.out, "Output directory")->required();
  compile->add_flag("--latency-feedback", ca.feedback, "Add a feedback edge from the final actor to the source");
  compile->add_option("--feedback-from", ca.feedback_from);
  compile->add_option("--feedback-to", ca.feedback_to);
  compile->add_option("--base-port", g.base_port, "Base port for every device");

  std::string launch_dir, report_path;
  std::optional<std::uint64_t> frames;
  std::size_t max_in_flight = 0;
  auto* launch_cmd = app.add_subcommand("launch", "Run a compiled deployment as local processes");
  launch_cmd->add_option("-d,--dir", launch_dir, "Directory written by compile")->required()->check(CLI::ExistingDirectory);
  launch_cmd->add_option("--frames", frames, "Override source frame counts")->check(CLI::PositiveNumber);
  launch_cmd->add_option("--max-in-flight", max_in_flight, "Frames in flight per device (0 = unbounded)");
  launch_cmd->add_option("--report", report_path, "Write the merged stats JSON here");
  add_shape_options(launch_cmd, g);
  launch_cmd->add_option("--connect-timeout", g.connect_timeout_ms);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run one device's manifest");
  run->add_option("-M,--manifest", ra.manifest)->required()->check(CLI::ExistingFile);
  run->add_option("--stats", ra.stats, "Write RunStats JSON here");
  run->add_option("--frames", ra.frames)->check(CLI::PositiveNumber);
  run->add_option("--max-in-flight", ra.max_in_flight);
  run->add_option("--connect-timeout", g.connect_timeout_ms);
  run->add_option("--inject-drop", ra.drops, "Fault injection EDGE:SEQ")->group("");
  add_shape_options(run, g);

  ExploreArgs ea;
  auto* explore = app.add_subcommand("explore", "Sweep partition points and report the best");
  explore->add_option("-g,--graph", ea.graph)->required()->check(CLI::ExistingFile);
  explore->add_option("-p,--platform", ea.platform)->required()->check(CLI::ExistingFile);
  explore->add_option("--client", ea.client)->required();
  explore->add_option("--server", ea.server)->required();
  explore->add_option("--frames", ea.frames)->capture_default_str();
  explore->add_option("--warmup", ea.warmup)->capture_default_str();
  explore->add_option("--pp-min", ea.pp_min)->capture_default_str();
  explore->add_option("--pp-max", ea.pp_max);
  explore->add_option("-o,--out", ea.out, "CSV report (default stdout)");
  explore->add_option("--work-dir", ea.work_dir, "Keep per-PP deployments here");
  explore->add_flag("--predict-only", ea.predict_only);
  explore->add_flag("--pin-sinks", ea.pin_sinks, "Keep actors without outputs on the server");
  explore->add_option("--base-port", g.base_port);
  add_shape_options(explore, g);

  std::optional<std::size_t> pp;
  bool feedback = false;
  auto* predict = app.add_subcommand("predict", "Predict per-PP times from declared compute costs");
  predict->add_option("-g,--graph", graph_path)->required()->check(CLI::ExistingFile);
  predict->add_option("--pp", pp, "Only this partition point");
  predict->add_flag("--feedback", feedback, "Include the feedback hop in end-to-end time");
  add_shape_options(predict, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  auto logger = spdlog::stderr_color_st("edgeprune");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*analyze) return cmd_analyze(graph_path, quiet, g.seed);
    if (*compile) return cmd_compile(ca, g);
    if (*launch_cmd) return cmd_launch(launch_dir, frames, max_in_flight, report_path, g);
    if (*run) return cmd_run(ra, g);
    if (*explore) return cmd_explore(ea, g);
    if (*predict) return cmd_predict(graph_path, pp, feedback, g);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return kUsageError;
}
