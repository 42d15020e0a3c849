#include "edgeprune/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace edgeprune {

std::optional<double> FrameTiming::endpoint_ms() const {
  if (!acquired || !committed) return std::nullopt;
  return static_cast<double>(*committed - *acquired) / 1000.0;
}

std::optional<double> FrameTiming::end_to_end_ms() const {
  if (!acquired || !feedback) return std::nullopt;
  return static_cast<double>(*feedback - *acquired) / 1000.0;
}

const ActorStats* RunStats::find_actor(std::string_view id) const {
  for (const auto& a : actors) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const EdgeStats* RunStats::find_edge(std::string_view id) const {
  for (const auto& e : edges) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const NetStats* RunStats::find_net(std::string_view edge) const {
  for (const auto& n : net) {
    if (n.edge == edge) return &n;
  }
  return nullptr;
}

namespace {

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

}  // namespace

Json to_json(const RunStats& s) {
  Json actors = Json::array();
  for (const auto& a : s.actors) {
    Json log = Json::array();
    for (const auto& f : a.log) log.push_back({f.frame, f.start, f.end});
    actors.push_back({{"id", a.id},
                      {"kind", a.kind},
                      {"firings", a.firings},
                      {"skipped", a.skipped},
                      {"busy_ms", a.busy_ms},
                      {"log", log}});
  }
  Json edges = Json::array();
  for (const auto& e : s.edges) {
    edges.push_back({{"id", e.id},
                     {"produced", e.produced},
                     {"consumed", e.consumed},
                     {"drained", e.drained},
                     {"discarded_partial", e.discarded_partial},
                     {"peak_occupancy", e.peak_occupancy},
                     {"capacity", e.capacity},
                     {"initial_tokens", e.initial_tokens}});
  }
  Json frames = Json::array();
  for (const auto& f : s.frames) {
    frames.push_back({{"index", f.index},
                      {"acquired", opt(f.acquired)},
                      {"committed", opt(f.committed)},
                      {"feedback", opt(f.feedback)}});
  }
  Json net = Json::array();
  for (const auto& n : s.net) {
    Json sends = Json::array();
    for (const auto& r : n.sends) sends.push_back({r.seq, r.bytes, r.ready, r.start, r.end});
    Json receives = Json::array();
    for (const auto& [seq, at] : n.receives) receives.push_back({seq, at});
    net.push_back({{"edge", n.edge},
                   {"role", n.role},
                   {"port", n.port},
                   {"frames", n.frames},
                   {"bytes", n.bytes},
                   {"sends", sends},
                   {"receives", receives}});
  }
  return {{"device", s.device},
          {"ok", s.ok},
          {"errors", s.errors},
          {"frames_processed", s.frames_processed},
          {"rate_violations", s.rate_violations},
          {"started_us", s.started},
          {"finished_us", s.finished},
          {"wall_ms", s.wall_ms()},
          {"actors", actors},
          {"edges", edges},
          {"frames", frames},
          {"net", net}};
}

RunStats run_stats_from_json(const Json& doc) {
  RunStats s;
  s.device = doc.at("device").get<std::string>();
  s.ok = doc.at("ok").get<bool>();
  s.errors = doc.at("errors").get<std::vector<std::string>>();
  s.frames_processed = doc.at("frames_processed").get<std::uint64_t>();
  s.rate_violations = doc.value("rate_violations", std::uint64_t{0});
  s.started = doc.at("started_us").get<Micros>();
  s.finished = doc.at("finished_us").get<Micros>();
  for (const auto& a : doc.at("actors")) {
    ActorStats as;
    as.id = a.at("id").get<std::string>();
    as.kind = a.at("kind").get<std::string>();
    as.firings = a.at("firings").get<std::uint64_t>();
    as.skipped = a.at("skipped").get<std::uint64_t>();
    as.busy_ms = a.at("busy_ms").get<double>();
    for (const auto& f : a.at("log")) {
      as.log.push_back({f.at(0).get<std::uint64_t>(), f.at(1).get<Micros>(), f.at(2).get<Micros>()});
    }
    s.actors.push_back(std::move(as));
  }
  for (const auto& e : doc.at("edges")) {
    EdgeStats es;
    es.id = e.at("id").get<std::string>();
    es.produced = e.at("produced").get<std::uint64_t>();
    es.consumed = e.at("consumed").get<std::uint64_t>();
    es.drained = e.at("drained").get<std::uint64_t>();
    es.discarded_partial = e.at("discarded_partial").get<std::uint64_t>();
    es.peak_occupancy = e.at("peak_occupancy").get<std::uint64_t>();
    es.capacity = e.at("capacity").get<std::uint64_t>();
    es.initial_tokens = e.at("initial_tokens").get<std::uint64_t>();
    s.edges.push_back(std::move(es));
  }
  for (const auto& f : doc.at("frames")) {
    s.frames.push_back({f.at("index").get<std::uint64_t>(), opt_from<Micros>(f.at("acquired")),
                        opt_from<Micros>(f.at("committed")), opt_from<Micros>(f.at("feedback"))});
  }
  for (const auto& n : doc.at("net")) {
    NetStats ns;
    ns.edge = n.at("edge").get<std::string>();
    ns.role = n.at("role").get<std::string>();
    ns.port = n.at("port").get<std::uint16_t>();
    ns.frames = n.at("frames").get<std::uint64_t>();
    ns.bytes = n.at("bytes").get<std::uint64_t>();
    for (const auto& r : n.at("sends")) {
      ns.sends.push_back({r.at(0).get<std::uint32_t>(), r.at(1).get<std::uint64_t>(),
                          r.at(2).get<Micros>(), r.at(3).get<Micros>(), r.at(4).get<Micros>()});
    }
    for (const auto& r : n.at("receives")) {
      ns.receives.emplace_back(r.at(0).get<std::uint32_t>(), r.at(1).get<Micros>());
    }
    s.net.push_back(std::move(ns));
  }
  return s;
}

Summary summarize(std::vector<double> values) {
  Summary out;
  out.count = values.size();
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::size_t n = values.size();
  out.median = n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
  auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  out.p95 = values[std::max<std::size_t>(rank, 1) - 1];
  return out;
}

}  // namespace edgeprune
