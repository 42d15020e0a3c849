#include "edgeprune/analyzer.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "edgeprune/error.hpp"
#include "edgeprune/rng.hpp"

namespace edgeprune::analyzer {

namespace {

struct Range {
  std::uint32_t lrl;
  std::uint32_t url;
};

Range edge_range(const ApplicationGraph& g, const EdgeSpec& e) {
  if (e.control) return {1, 1};
  const PortSpec& p = g.port_of(e.producer);
  return {p.lrl, p.url};
}

bool is_dynamic_edge(const ApplicationGraph& g, const EdgeSpec& e) {
  if (e.control) return false;
  return g.port_of(e.producer).dynamic || g.port_of(e.consumer).dynamic;
}

std::string describe(const RateAssignment& rates) {
  std::ostringstream ss;
  bool first = true;
  for (const auto& [edge, atr] : rates) {
    ss << (first ? "" : ",") << edge << "=" << atr;
    first = false;
  }
  return ss.str();
}

}  // namespace

std::string_view to_string(Severity s) { return s == Severity::kError ? "error" : "warning"; }

std::vector<Diagnostic> check_structure(const ApplicationGraph& graph) {
  std::vector<Diagnostic> out;
  for (auto& v : check_model_rules(graph)) {
    out.push_back({std::move(v.rule), Severity::kError, std::move(v.element), std::move(v.message)});
  }
  return out;
}

std::vector<Diagnostic> check_capacities(const ApplicationGraph& graph) {
  std::vector<Diagnostic> out;
  for (const auto& e : graph.edges) {
    std::uint32_t url = std::max(graph.port_of(e.producer).url, graph.port_of(e.consumer).url);
    if (e.capacity < url) {
      out.push_back({"CAPACITY", Severity::kError, e.id,
                     "buffer overflow: edge " + e.id + " capacity " + std::to_string(e.capacity) +
                         " < url " + std::to_string(url)});
    }
  }
  return out;
}

ScheduleResult simulate_schedule(const ApplicationGraph& graph, const RateAssignment& rates) {
  std::map<std::string, std::uint32_t> tokens;
  for (const auto& e : graph.edges) {
    auto it = rates.find(e.id);
    if (it == rates.end()) throw ValidationError("rates", e.id, "no atr assigned to edge " + e.id);
    Range r = edge_range(graph, e);
    if (it->second < r.lrl || it->second > r.url) {
      throw ValidationError("rates", e.id,
                            "atr " + std::to_string(it->second) + " outside [lrl, url] on edge " + e.id);
    }
    tokens[e.id] = e.initial_tokens;
  }

  std::vector<const ActorSpec*> order;
  for (const auto& a : graph.actors) order.push_back(&a);
  std::sort(order.begin(), order.end(),
            [](const ActorSpec* a, const ActorSpec* b) { return a->id < b->id; });

  std::map<std::string, std::vector<const EdgeSpec*>> inputs;
  std::map<std::string, std::vector<const EdgeSpec*>> outputs;
  for (const auto& e : graph.edges) {
    inputs[e.consumer.actor].push_back(&e);
    outputs[e.producer.actor].push_back(&e);
  }

  auto enabled = [&](const ActorSpec& a) {
    std::map<std::string, std::int64_t> after;
    for (const EdgeSpec* e : inputs[a.id]) {
      std::uint32_t r = rates.at(e->id);
      if (tokens[e->id] < r) return false;
      after[e->id] = static_cast<std::int64_t>(tokens[e->id]) - r;
    }
    for (const EdgeSpec* e : outputs[a.id]) {
      std::int64_t level = after.contains(e->id) ? after[e->id] : tokens[e->id];
      if (level + rates.at(e->id) > e->capacity) return false;
    }
    return true;
  };

  std::set<std::string> fired;
  std::vector<std::string> firing_order;
  while (fired.size() < order.size()) {
    const ActorSpec* next = nullptr;
    for (const ActorSpec* a : order) {
      if (!fired.contains(a->id) && enabled(*a)) {
        next = a;
        break;
      }
    }
    if (next == nullptr) {
      Deadlock d;
      d.firing_order = firing_order;
      for (const ActorSpec* a : order) {
        if (!fired.contains(a->id)) d.blocked.push_back(a->id);
      }
      d.tokens = tokens;
      return d;
    }
    for (const EdgeSpec* e : inputs[next->id]) tokens[e->id] -= rates.at(e->id);
    for (const EdgeSpec* e : outputs[next->id]) tokens[e->id] += rates.at(e->id);
    fired.insert(next->id);
    firing_order.push_back(next->id);
  }
  return Completed{firing_order};
}

std::vector<RateAssignment> boundary_assignments(const ApplicationGraph& graph, std::uint64_t seed) {
  RateAssignment base;
  std::vector<const EdgeSpec*> dynamic;
  for (const auto& e : graph.edges) {
    Range r = edge_range(graph, e);
    base[e.id] = r.url;
    if (is_dynamic_edge(graph, e)) dynamic.push_back(&e);
  }

  std::vector<std::vector<std::uint32_t>> candidates;
  std::uint64_t total = 1;
  for (const EdgeSpec* e : dynamic) {
    Range r = edge_range(graph, *e);
    std::vector<std::uint32_t> c{r.lrl, r.url};
    if (r.lrl == 0) c.push_back(0);  // the skip firing, counted separately
    if (total <= kMaxExhaustive) total *= c.size();
    candidates.push_back(std::move(c));
  }

  std::vector<RateAssignment> out;
  if (total <= kMaxExhaustive) {
    std::vector<std::size_t> digit(dynamic.size(), 0);
    for (std::uint64_t n = 0; n < total; ++n) {
      RateAssignment a = base;
      for (std::size_t i = 0; i < dynamic.size(); ++i) a[dynamic[i]->id] = candidates[i][digit[i]];
      out.push_back(std::move(a));
      for (std::size_t i = 0; i < digit.size(); ++i) {
        if (++digit[i] < candidates[i].size()) break;
        digit[i] = 0;
      }
    }
    return out;
  }

  RateAssignment all_lrl = base;
  RateAssignment all_url = base;
  RateAssignment all_zero = base;
  for (const EdgeSpec* e : dynamic) {
    Range r = edge_range(graph, *e);
    all_lrl[e->id] = r.lrl;
    all_url[e->id] = r.url;
    all_zero[e->id] = r.lrl;  // 0 when admissible, otherwise the lowest rate
  }
  out.push_back(std::move(all_lrl));
  out.push_back(std::move(all_url));
  out.push_back(std::move(all_zero));
  Xoshiro256 rng(seed);
  for (std::uint64_t n = 0; n < kRandomSamples; ++n) {
    RateAssignment a = base;
    for (const EdgeSpec* e : dynamic) {
      Range r = edge_range(graph, *e);
      a[e->id] = static_cast<std::uint32_t>(rng.uniform(r.lrl, r.url));
    }
    out.push_back(std::move(a));
  }
  return out;
}

AnalysisReport analyze(const ApplicationGraph& graph, std::uint64_t seed) {
  AnalysisReport report;
  report.diagnostics = check_structure(graph);
  if (report.diagnostics.empty()) {
    report.diagnostics = check_capacities(graph);
  }
  if (report.diagnostics.empty()) {
    std::uint64_t deadlocks = 0;
    for (const auto& rates : boundary_assignments(graph, seed)) {
      ++report.checked_assignments;
      auto result = simulate_schedule(graph, rates);
      if (auto* d = std::get_if<Deadlock>(&result)) {
        if (deadlocks++ == 0) report.deadlock_witness = {{rates, *d}};
      }
    }
    if (deadlocks > 0) {
      const auto& [rates, d] = *report.deadlock_witness;
      std::string blocked;
      for (const auto& b : d.blocked) blocked += (blocked.empty() ? "" : ",") + b;
      report.diagnostics.push_back(
          {"DEADLOCK", Severity::kError, d.blocked.front(),
           "deadlock under " + std::to_string(deadlocks) + " of " +
               std::to_string(report.checked_assignments) + " rate assignments; first witness {" +
               describe(rates) + "} leaves {" + blocked + "} unable to fire"});
    }
  }
  report.consistent = std::none_of(report.diagnostics.begin(), report.diagnostics.end(),
                                   [](const Diagnostic& d) { return d.severity == Severity::kError; });
  return report;
}

Json to_json(const AnalysisReport& report) {
  Json diags = Json::array();
  for (const auto& d : report.diagnostics) {
    diags.push_back({{"rule", d.rule},
                     {"severity", std::string(to_string(d.severity))},
                     {"element", d.element},
                     {"message", d.message}});
  }
  Json out = {{"verdict", report.consistent ? "consistent" : "inconsistent"},
              {"diagnostics", diags},
              {"checked_assignments", report.checked_assignments}};
  if (report.deadlock_witness) {
    const auto& [rates, d] = *report.deadlock_witness;
    out["deadlock"] = {{"rates", rates},
                       {"firing_order", d.firing_order},
                       {"blocked", d.blocked},
                       {"tokens", d.tokens}};
  }
  return out;
}

}  // namespace edgeprune::analyzer
