#include "edgeprune/explorer.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "edgeprune/deploy.hpp"
#include "edgeprune/error.hpp"
#include "edgeprune/launch.hpp"

namespace edgeprune::explorer {

namespace {

bool orders_actors(const EdgeSpec& e) {
  return !e.control && e.producer.port != kFeedbackPort && e.consumer.port != kFeedbackPort;
}

// Kahn's algorithm over `nodes`, picking the ready node with the lowest rank.
std::vector<std::size_t> topo(std::size_t n, const std::vector<std::set<std::size_t>>& succ,
                              const std::vector<std::size_t>& rank, const std::vector<std::string>& names) {
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& s : succ)
    for (std::size_t v : s) ++indeg[v];
  auto cmp = [&](std::size_t a, std::size_t b) { return rank[a] > rank[b]; };
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.push_back(v);
  }
  std::vector<std::size_t> out;
  while (!ready.empty()) {
    std::make_heap(ready.begin(), ready.end(), cmp);
    std::pop_heap(ready.begin(), ready.end(), cmp);
    std::size_t v = ready.back();
    ready.pop_back();
    out.push_back(v);
    for (std::size_t w : succ[v]) {
      if (--indeg[w] == 0) ready.push_back(w);
    }
  }
  if (out.size() != n) {
    for (std::size_t v = 0; v < n; ++v) {
      if (indeg[v] > 0) throw ValidationError("precedence", names[v], "data-edge cycle through " + names[v]);
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::size_t PrecedenceIndex::index_of(std::string_view actor) const {
  auto it = std::find(order.begin(), order.end(), actor);
  if (it == order.end()) throw Error("actor " + std::string(actor) + " not in precedence index");
  return static_cast<std::size_t>(it - order.begin());
}

PrecedenceIndex precedence_index(const ApplicationGraph& graph) {
  const std::size_t n = graph.actors.size();
  std::map<std::string, std::size_t> decl;
  for (std::size_t i = 0; i < n; ++i) decl[graph.actors[i].id] = i;

  // Group: one node per DPG, one per remaining actor.
  std::vector<std::size_t> group(n);
  std::vector<std::string> group_names;
  std::vector<std::size_t> group_rank;
  std::map<std::string, std::size_t> dpg_group;
  for (std::size_t i = 0; i < n; ++i) {
    const ActorSpec& a = graph.actors[i];
    if (a.dpg) {
      auto [it, inserted] = dpg_group.emplace(*a.dpg, group_names.size());
      if (inserted) {
        group_names.push_back(*a.dpg);
        group_rank.push_back(i);
      }
      group[i] = it->second;
    } else {
      group[i] = group_names.size();
      group_names.push_back(a.id);
      group_rank.push_back(i);
    }
  }
  // A DPG is ranked at its entry DA: the first DA fed from outside the group.
  for (const auto& [dpg, gi] : dpg_group) {
    std::optional<std::size_t> entry;
    for (const auto& e : graph.edges) {
      if (!orders_actors(e)) continue;
      std::size_t c = decl.at(e.consumer.actor);
      std::size_t p = decl.at(e.producer.actor);
      if (group[c] == gi && group[p] != gi && graph.actors[c].kind == ActorKind::kDA) {
        entry = std::min(entry.value_or(c), c);
      }
    }
    if (entry) group_rank[gi] = *entry;
  }

  std::vector<std::set<std::size_t>> gsucc(group_names.size());
  std::vector<std::set<std::size_t>> asucc(n);
  for (const auto& e : graph.edges) {
    if (!orders_actors(e)) continue;
    std::size_t p = decl.at(e.producer.actor);
    std::size_t c = decl.at(e.consumer.actor);
    if (group[p] != group[c]) {
      gsucc[group[p]].insert(group[c]);
    } else if (graph.actors[p].dpg) {
      asucc[p].insert(c);
    } else if (p == c) {
      throw ValidationError("precedence", graph.actors[p].id, "data-edge cycle through " + graph.actors[p].id);
    }
  }

  std::vector<std::string> actor_names;
  std::vector<std::size_t> actor_rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    actor_names.push_back(graph.actors[i].id);
    actor_rank[i] = i;
  }
  std::vector<std::size_t> within = topo(n, asucc, actor_rank, actor_names);

  PrecedenceIndex out;
  for (std::size_t gi : topo(group_names.size(), gsucc, group_rank, group_names)) {
    for (std::size_t i : within) {
      if (group[i] == gi) out.order.push_back(graph.actors[i].id);
    }
  }
  return out;
}

PartitionPoint partition_point(const ApplicationGraph& graph, const PrecedenceIndex& index, std::size_t k,
                               const std::vector<std::string>& pinned) {
  if (k < 1 || k > index.size()) throw Error("partition point " + std::to_string(k) + " out of range");
  PartitionPoint pp;
  pp.k = k;
  std::set<std::string> client;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const std::string& a = index.order[i];
    bool pin = std::find(pinned.begin(), pinned.end(), a) != pinned.end();
    if (i < k && !pin) {
      pp.client_actors.push_back(a);
      client.insert(a);
    } else {
      pp.server_actors.push_back(a);
    }
  }
  for (const auto& e : graph.edges) {
    if (!orders_actors(e)) continue;
    if (client.contains(e.producer.actor) && !client.contains(e.consumer.actor)) {
      std::uint64_t bytes = std::uint64_t{e.token_size} * graph.port_of(e.producer).url;
      pp.crossing.push_back({e.id, e.token_size, bytes});
      pp.crossing_bytes += bytes;
    }
  }
  return pp;
}

std::vector<MappingPair> generate_mappings(const ApplicationGraph& graph, const PlatformGraph& platform,
                                           const std::string& client, const std::string& server,
                                           const GenerateOptions& options) {
  if (graph.actors.size() < 2) throw Error("partition points need at least 2 actors");
  const Device* c = platform.find_device(client);
  const Device* s = platform.find_device(server);
  if (c == nullptr) throw Error("unknown client device " + client);
  if (s == nullptr) throw Error("unknown server device " + server);
  if (c->units.empty() || s->units.empty()) throw Error("devices need at least one processing unit");
  std::vector<std::string> pinned;
  if (options.pin_sinks) {
    for (const auto& a : graph.actors) {
      bool has_data_out = std::any_of(a.ports.begin(), a.ports.end(), [](const PortSpec& p) {
        return p.direction == Direction::kOutput && !p.is_feedback();
      });
      if (!has_data_out) pinned.push_back(a.id);
    }
  }
  auto index = precedence_index(graph);
  std::vector<MappingPair> out;
  for (std::size_t k = 1; k < index.size(); ++k) {
    MappingPair pair{partition_point(graph, index, k, pinned), {}};
    Json assignments = Json::object();
    for (const auto& a : pair.pp.client_actors) assignments[a] = {c->id, c->units.front()};
    for (const auto& a : pair.pp.server_actors) assignments[a] = {s->id, s->units.front()};
    pair.mapping = mapping_from_json({{"assignments", assignments}}, graph, platform);
    out.push_back(std::move(pair));
  }
  return out;
}

Mapping local_mapping(const ApplicationGraph& graph, const PlatformGraph& platform, const std::string& device) {
  const Device* d = platform.find_device(device);
  if (d == nullptr || d->units.empty()) throw Error("unknown device " + device);
  Mapping m;
  for (const auto& a : graph.actors) m.assignments[a.id] = {d->id, d->units.front()};
  return m;
}

ComputeTimes declared_compute_ms(const ApplicationGraph& graph) {
  ComputeTimes out;
  for (const auto& a : graph.actors) {
    const Json& p = a.kernel_params;
    if (a.kernel == "source" || a.kernel == "sink") {
      out[a.id] = 0.0;
    } else if (a.kernel == "busywork") {
      out[a.id] = p.value("ms", 0.0);
    } else if (a.kernel == "sequence" && p.contains("layers")) {
      double ms = 0.0;
      bool declared = true;
      for (const auto& l : p["layers"]) {
        std::string op = l.value("op", "");
        if (op == "busywork") {
          ms += l.value("ms", 0.0);
        } else if (op != "relu") {
          declared = false;
        }
      }
      if (declared) out[a.id] = ms;
    }
  }
  return out;
}

ComputeTimes measured_compute_ms(const std::vector<RunStats>& stats) {
  ComputeTimes out;
  for (const auto& s : stats) {
    for (const auto& a : s.actors) {
      if (a.kind == "TXF" || a.kind == "RXF" || a.firings == 0) continue;
      out[a.id] = a.busy_ms / static_cast<double>(a.firings + a.skipped);
    }
  }
  return out;
}

Prediction predict_time(const PartitionPoint& pp, const ComputeTimes& compute, const net::LinkShape& link,
                        bool feedback) {
  auto time_of = [&](const std::string& a) {
    auto it = compute.find(a);
    if (it == compute.end()) throw Error("missing compute time for actor " + a);
    return it->second;
  };
  Prediction p;
  for (const auto& a : pp.client_actors) p.endpoint_ms += time_of(a);
  for (const auto& a : pp.server_actors) p.server_ms += time_of(a);
  if (!pp.local()) {
    if (link.bandwidth > 0) p.transfer_ms = static_cast<double>(pp.crossing_bytes) / link.bandwidth * 1000.0;
    p.transfer_ms += link.latency_ms;
  }
  p.endpoint_ms += p.transfer_ms;
  p.end_to_end_ms = p.endpoint_ms + p.server_ms;
  if (feedback && !pp.local()) p.end_to_end_ms += link.latency_ms;
  return p;
}

const ProfileRow* ProfileReport::row(std::size_t pp) const {
  for (const auto& r : rows) {
    if (r.pp == pp) return &r;
  }
  return nullptr;
}

const ProfileRow* ProfileReport::baseline() const {
  for (const auto& r : rows) {
    if (!r.pp) return &r;
  }
  return nullptr;
}

std::vector<double> endpoint_times(const RunStats& client, std::uint64_t warmup) {
  std::vector<double> out;
  for (const auto& f : client.frames) {
    if (f.index < warmup) continue;
    if (auto ms = f.endpoint_ms()) out.push_back(*ms);
  }
  return out;
}

namespace {

void run_row(ProfileRow& row, const ApplicationGraph& graph, const PlatformGraph& platform,
             const Mapping& mapping, const SweepOptions& options, const std::string& tag,
             std::vector<RunStats>* keep = nullptr) {
  try {
    CompileOptions copts;
    copts.base_port = options.base_port;
    copts.default_base_port = options.default_base_port;
    copts.require_consistent = false;  // checked once by the caller
    auto manifests = partition(graph, platform, mapping, copts);
    auto dir = options.work_dir / tag;
    std::filesystem::remove_all(dir);
    write_deployment(dir, manifests);
    LaunchOptions lopts;
    lopts.binary = options.binary;
    lopts.frames = options.warmup + options.frames;
    lopts.shape = options.shape;
    lopts.connect_timeout = options.connect_timeout;
    lopts.max_in_flight = 1;
    auto report = launch(dir, lopts);
    if (!report.ok) {
      row.status = "failed";
      for (const auto& e : report.errors) row.error += (row.error.empty() ? "" : "; ") + e;
      return;
    }
    const RunStats* client = report.find_device(options.client);
    if (client == nullptr) throw Error("no stats from client device " + options.client);
    row.measured = summarize(endpoint_times(*client, options.warmup));
    if (row.measured.count == 0) throw Error("no frames measured");
    row.status = "ok";
    if (keep != nullptr) *keep = report.devices;
  } catch (const std::exception& e) {
    row.status = "failed";
    row.error = e.what();
  }
}

}  // namespace

ProfileReport sweep(const ApplicationGraph& graph, const PlatformGraph& platform, const SweepOptions& options) {
  if (options.frames < 1) throw Error("frames must be ≥ 1");
  auto pairs = generate_mappings(graph, platform, options.client, options.server, {options.pin_sinks});
  std::size_t pp_max = options.pp_max.value_or(pairs.size());
  if (options.pp_min < 1 || options.pp_min > pp_max || pp_max > pairs.size()) {
    throw Error("PP range [" + std::to_string(options.pp_min) + ", " + std::to_string(pp_max) +
                "] outside 1.." + std::to_string(pairs.size()));
  }

  ProfileReport report;
  report.shape = options.shape;
  ComputeTimes compute = declared_compute_ms(graph);
  bool declared = compute.size() == graph.actors.size();
  if (options.predict_only && !declared) {
    for (const auto& a : graph.actors) {
      if (!compute.contains(a.id)) throw Error("missing compute time for actor " + a.id);
    }
  }

  auto index = precedence_index(graph);
  ProfileRow base;
  base.client_actors = graph.actors.size();
  PartitionPoint local = partition_point(graph, index, index.size());
  if (options.predict_only) {
    base.status = "predicted";
  } else {
    std::vector<RunStats> calibration;
    run_row(base, graph, platform, local_mapping(graph, platform, options.client), options, "local",
            &calibration);
    if (!declared && base.status == "ok") {
      compute = measured_compute_ms(calibration);
      declared = true;
    }
  }
  if (declared) base.predicted_ms = predict_time(local, compute, options.shape).endpoint_ms;

  for (const auto& pair : pairs) {
    ProfileRow row;
    row.pp = pair.pp.k;
    row.client_actors = pair.pp.client_actors.size();
    row.crossing_bytes = pair.pp.crossing_bytes;
    if (declared) {
      try {
        row.predicted_ms = predict_time(pair.pp, compute, options.shape).endpoint_ms;
      } catch (const Error&) {
      }
    }
    if (options.predict_only) {
      row.status = "predicted";
    } else {
      run_row(row, graph, platform, pair.mapping, options, "pp" + std::to_string(pair.pp.k));
    }
    report.rows.push_back(std::move(row));
  }
  report.rows.push_back(std::move(base));

  std::optional<double> best;
  for (const auto& r : report.rows) {
    if (!r.pp || *r.pp < options.pp_min || *r.pp > pp_max) continue;
    std::optional<double> v;
    if (r.status == "ok") v = r.measured.mean;
    if (r.status == "predicted") v = r.predicted_ms;
    if (v && (!best || *v < *best)) {
      best = v;
      report.chosen_pp = r.pp;
    }
  }
  return report;
}

std::string report_csv(const ProfileReport& report) {
  std::ostringstream out;
  out << "pp,client_actors,crossing_bytes,mean_ms,median_ms,p95_ms,predicted_ms,status\n";
  for (const auto& r : report.rows) {
    out << (r.pp ? std::to_string(*r.pp) : "local") << ',' << r.client_actors << ',' << r.crossing_bytes << ',';
    if (r.status == "ok") {
      out << fmt(r.measured.mean) << ',' << fmt(r.measured.median) << ',' << fmt(r.measured.p95) << ',';
    } else {
      out << ",,,";
    }
    out << (r.predicted_ms && r.status != "failed" ? fmt(*r.predicted_ms) : "") << ',' << r.status << '\n';
  }
  return out.str();
}

}  // namespace edgeprune::explorer
