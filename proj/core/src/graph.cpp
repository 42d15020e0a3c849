#include "edgeprune/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "edgeprune/error.hpp"

namespace edgeprune {

namespace {

constexpr std::uint32_t kControlTokenSize = 4;

// Walks a JSON object while remembering which keys were consumed, so unknown
// keys can be rejected with the path of the enclosing element.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("expected an object");
  }

  const Json* optional(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const Json& required(const std::string& key) {
    const Json* v = optional(key);
    if (v == nullptr) fail("missing key '" + key + "'");
    return *v;
  }

  std::string string(const std::string& key) {
    const Json& v = required(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }

  std::optional<std::string> optional_string(const std::string& key) {
    const Json* v = optional(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) fail("'" + key + "' must be a string");
    return v->get<std::string>();
  }

  std::optional<std::uint32_t> optional_uint(const std::string& key) {
    const Json* v = optional(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number_integer() || v->get<std::int64_t>() < 0 ||
        v->get<std::int64_t>() > std::int64_t{0xFFFFFFFF}) {
      fail("'" + key + "' must be a non-negative integer");
    }
    return v->get<std::uint32_t>();
  }

  std::uint32_t uint(const std::string& key) {
    if (obj_.find(key) == obj_.end()) fail("missing key '" + key + "'");
    return *optional_uint(key);
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = optional(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) fail("'" + key + "' must be a boolean");
    return v->get<bool>();
  }

  const Json& array(const std::string& key) {
    const Json& v = required(key);
    if (!v.is_array()) fail("'" + key + "' must be an array");
    return v;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.contains(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(path_ + ": " + msg, 0);
  }

  const std::string& path() const { return path_; }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("syntax error: ") + e.what(), e.byte);
  }
}

[[noreturn]] void invalid(const std::string& rule, const std::string& element,
                          const std::string& msg) {
  throw ValidationError(rule, element, msg);
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.';
  });
}

void require_id(const std::string& id, const std::string& what) {
  if (!valid_id(id)) {
    invalid("id", id, what + " id '" + id + "' must be non-empty and use only [A-Za-z0-9_.-]");
  }
}

bool is_dynamic_kind(ActorKind k) {
  return k == ActorKind::kDA || k == ActorKind::kCA || k == ActorKind::kDPA;
}

PortRef port_ref_from_json(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_string() || !v[1].is_string()) {
    throw ParseError(path + ": expected [actor, port]", 0);
  }
  return {v[0].get<std::string>(), v[1].get<std::string>()};
}

void check_type_invariants(const ApplicationGraph& g, const ParseOptions& options) {
  if (g.actors.empty()) invalid("graph", g.name, "graph must contain at least one actor");

  std::set<std::string> actor_ids;
  for (const auto& a : g.actors) {
    require_id(a.id, "actor");
    if (!actor_ids.insert(a.id).second) invalid("unique", a.id, "duplicate actor id " + a.id);
    if ((a.kind == ActorKind::kTXF || a.kind == ActorKind::kRXF) && !options.allow_fifo_actors) {
      invalid("fifo-actor", a.id,
              "actor " + a.id + ": TXF/RXF actors are inserted by the compiler, not authored");
    }
    if (a.ports.empty() && a.kernel != "source" && a.kernel != "sink") {
      invalid("ports", a.id, "actor " + a.id + " has no ports");
    }
    std::set<std::string> port_ids;
    for (const auto& p : a.ports) {
      require_id(p.id, "port");
      std::string where = a.id + "." + p.id;
      if (!port_ids.insert(p.id).second) invalid("unique", where, "duplicate port id " + where);
      if (p.url < 1) invalid("port-rate", where, "port " + where + ": url must be >= 1");
      if (p.lrl > p.url) invalid("port-rate", where, "port " + where + ": lrl must be <= url");
      if (!p.dynamic && p.lrl != p.url) {
        invalid("port-rate", where, "port " + where + ": static port must have lrl == url");
      }
      if (p.dynamic && !is_dynamic_kind(a.kind)) {
        invalid("port-rate", where,
                "port " + where + ": dynamic ports are only allowed on DA, DPA or CA actors");
      }
    }
  }

  std::set<std::string> edge_ids;
  std::map<std::pair<std::string, std::string>, int> attach;
  for (const auto& e : g.edges) {
    require_id(e.id, "edge");
    if (!edge_ids.insert(e.id).second) invalid("unique", e.id, "duplicate edge id " + e.id);
    auto resolve = [&](const PortRef& r, Direction want) -> const PortSpec& {
      const ActorSpec* a = g.find_actor(r.actor);
      if (a == nullptr) invalid("edge-ref", e.id, "edge " + e.id + ": unknown actor " + r.actor);
      const PortSpec* p = a->find_port(r.port);
      if (p == nullptr) {
        invalid("edge-ref", e.id, "edge " + e.id + ": unknown port " + r.actor + "." + r.port);
      }
      if (p->direction != want) {
        invalid("edge-direction", e.id,
                "edge " + e.id + ": port " + r.actor + "." + r.port + " must be an " +
                    std::string(to_string(want)) + " port");
      }
      ++attach[{r.actor, r.port}];
      return *p;
    };
    const PortSpec& out = resolve(e.producer, Direction::kOutput);
    const PortSpec& in = resolve(e.consumer, Direction::kInput);
    if (e.token_size == 0) invalid("token-size", e.id, "edge " + e.id + ": token_size must be > 0");
    if (e.capacity == 0) invalid("capacity", e.id, "edge " + e.id + ": capacity must be > 0");
    if (e.initial_tokens > e.capacity) {
      invalid("initial-tokens", e.id, "edge " + e.id + ": initial_tokens exceeds capacity");
    }
    if (e.control) {
      if (g.find_actor(e.producer.actor)->kind != ActorKind::kCA) {
        invalid("control", e.id, "control edge " + e.id + " must originate at a CA");
      }
      if (e.token_size != kControlTokenSize || out.url != 1 || out.lrl != 1 || in.url != 1 ||
          in.lrl != 1) {
        invalid("control", e.id, "control edge " + e.id + " must carry one 4-byte token per firing");
      }
    }
  }
  for (const auto& a : g.actors) {
    for (const auto& p : a.ports) {
      int n = attach[{a.id, p.id}];
      if (n == 0) invalid("port-edge", a.id + "." + p.id, "port " + a.id + "." + p.id + " is not connected");
      if (n > 1) {
        invalid("port-edge", a.id + "." + p.id,
                "port " + a.id + "." + p.id + " is attached to more than one edge");
      }
    }
  }

  std::set<std::string> dpg_ids;
  for (const auto& d : g.dpgs) {
    require_id(d.id, "dpg");
    if (!dpg_ids.insert(d.id).second) invalid("unique", d.id, "duplicate dpg id " + d.id);
    for (const auto& m : d.members) {
      if (g.find_actor(m) == nullptr) invalid("dpg-ref", d.id, "dpg " + d.id + ": unknown member " + m);
    }
  }

  if (options.allow_fifo_actors) return;
  // Weak connectivity over data edges.
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& e : g.edges) {
    if (e.control) continue;
    adj[e.producer.actor].push_back(e.consumer.actor);
    adj[e.consumer.actor].push_back(e.producer.actor);
  }
  std::set<std::string> seen{g.actors.front().id};
  std::vector<std::string> stack{g.actors.front().id};
  while (!stack.empty()) {
    std::string cur = stack.back();
    stack.pop_back();
    for (const auto& n : adj[cur]) {
      if (seen.insert(n).second) stack.push_back(n);
    }
  }
  // CAs hang off the data graph through control edges only.
  for (const auto& a : g.actors) {
    if (!seen.contains(a.id) && a.kind != ActorKind::kCA) {
      invalid("connected", a.id, "data graph is not connected: actor " + a.id + " is unreachable");
    }
  }
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::kInput ? "input" : "output"; }

std::string_view to_string(ActorKind k) {
  switch (k) {
    case ActorKind::kSPA: return "SPA";
    case ActorKind::kDA: return "DA";
    case ActorKind::kCA: return "CA";
    case ActorKind::kDPA: return "DPA";
    case ActorKind::kTXF: return "TXF";
    case ActorKind::kRXF: return "RXF";
  }
  return "?";
}

std::optional<ActorKind> actor_kind_from_string(std::string_view s) {
  for (ActorKind k : {ActorKind::kSPA, ActorKind::kDA, ActorKind::kCA, ActorKind::kDPA,
                      ActorKind::kTXF, ActorKind::kRXF}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

const PortSpec* ActorSpec::find_port(std::string_view port_id) const {
  for (const auto& p : ports) {
    if (p.id == port_id) return &p;
  }
  return nullptr;
}

const ActorSpec* ApplicationGraph::find_actor(std::string_view id) const {
  for (const auto& a : actors) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const EdgeSpec* ApplicationGraph::find_edge(std::string_view id) const {
  for (const auto& e : edges) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const DpgSpec* ApplicationGraph::find_dpg(std::string_view id) const {
  for (const auto& d : dpgs) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

const EdgeSpec* ApplicationGraph::edge_at(std::string_view actor, std::string_view port) const {
  for (const auto& e : edges) {
    if ((e.producer.actor == actor && e.producer.port == port) ||
        (e.consumer.actor == actor && e.consumer.port == port)) {
      return &e;
    }
  }
  return nullptr;
}

const PortSpec& ApplicationGraph::port_of(const PortRef& ref) const {
  const ActorSpec* a = find_actor(ref.actor);
  const PortSpec* p = a == nullptr ? nullptr : a->find_port(ref.port);
  if (p == nullptr) throw Error("unknown port " + ref.actor + "." + ref.port);
  return *p;
}

const Device* PlatformGraph::find_device(std::string_view id) const {
  for (const auto& d : devices) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

ApplicationGraph application_graph_from_json(const Json& doc, const ParseOptions& options) {
  ApplicationGraph g;
  ObjectReader root(doc, "graph");
  g.name = root.string("name");
  const Json& actors = root.array("actors");
  for (std::size_t i = 0; i < actors.size(); ++i) {
    ObjectReader r(actors[i], "actors[" + std::to_string(i) + "]");
    ActorSpec a;
    a.id = r.string("id");
    std::string kind = r.string("kind");
    auto k = actor_kind_from_string(kind);
    if (!k) r.fail("unknown actor kind '" + kind + "'");
    a.kind = *k;
    a.kernel = r.string("kernel");
    if (const Json* params = r.optional("kernel_params")) {
      if (!params->is_object()) r.fail("'kernel_params' must be an object");
      a.kernel_params = *params;
    }
    a.dpg = r.optional_string("dpg");
    const Json& ports = r.array("ports");
    for (std::size_t j = 0; j < ports.size(); ++j) {
      ObjectReader pr(ports[j], r.path() + ".ports[" + std::to_string(j) + "]");
      PortSpec p;
      p.id = pr.string("id");
      std::string dir = pr.string("direction");
      if (dir == "input") {
        p.direction = Direction::kInput;
      } else if (dir == "output") {
        p.direction = Direction::kOutput;
      } else {
        pr.fail("direction must be 'input' or 'output'");
      }
      p.url = pr.optional_uint("url").value_or(1);
      p.dynamic = pr.boolean("dynamic", false);
      p.lrl = pr.optional_uint("lrl").value_or(p.url);
      pr.finish();
      a.ports.push_back(std::move(p));
    }
    r.finish();
    g.actors.push_back(std::move(a));
  }

  if (const Json* edges = root.optional("edges")) {
    if (!edges->is_array()) root.fail("'edges' must be an array");
    for (std::size_t i = 0; i < edges->size(); ++i) {
      ObjectReader r((*edges)[i], "edges[" + std::to_string(i) + "]");
      EdgeSpec e;
      e.id = r.string("id");
      e.producer = port_ref_from_json(r.required("producer"), r.path() + ".producer");
      e.consumer = port_ref_from_json(r.required("consumer"), r.path() + ".consumer");
      e.token_size = r.uint("token_size");
      auto capacity = r.optional_uint("capacity");
      e.initial_tokens = r.optional_uint("initial_tokens").value_or(0);
      e.control = r.boolean("control", false);
      r.finish();
      if (capacity) {
        e.capacity = *capacity;
      } else {
        const ActorSpec* a = g.find_actor(e.producer.actor);
        const PortSpec* p = a == nullptr ? nullptr : a->find_port(e.producer.port);
        e.capacity = p == nullptr ? 1 : std::max(p->url, e.initial_tokens);
      }
      g.edges.push_back(std::move(e));
    }
  }

  if (const Json* dpgs = root.optional("dpgs")) {
    if (!dpgs->is_array()) root.fail("'dpgs' must be an array");
    for (std::size_t i = 0; i < dpgs->size(); ++i) {
      ObjectReader r((*dpgs)[i], "dpgs[" + std::to_string(i) + "]");
      DpgSpec d;
      d.id = r.string("id");
      for (const auto& m : r.array("members")) {
        if (!m.is_string()) r.fail("members must be strings");
        d.members.push_back(m.get<std::string>());
      }
      r.finish();
      g.dpgs.push_back(std::move(d));
    }
  }
  root.finish();

  check_type_invariants(g, options);
  if (options.check_model_rules) {
    auto violations = check_model_rules(g);
    if (!violations.empty()) {
      const auto& v = violations.front();
      invalid(v.rule, v.element, v.message);
    }
  }
  g.graph_hash = compute_graph_hash(g);
  return g;
}

ApplicationGraph parse_application_graph(std::string_view text, const ParseOptions& options) {
  return application_graph_from_json(parse_json(text), options);
}

Json to_json(const ApplicationGraph& graph) {
  Json actors = Json::array();
  for (const auto& a : graph.actors) {
    Json ports = Json::array();
    for (const auto& p : a.ports) {
      ports.push_back({{"id", p.id},
                       {"direction", std::string(to_string(p.direction))},
                       {"lrl", p.lrl},
                       {"url", p.url},
                       {"dynamic", p.dynamic}});
    }
    Json ja = {{"id", a.id},
               {"kind", std::string(to_string(a.kind))},
               {"kernel", a.kernel},
               {"kernel_params", a.kernel_params},
               {"ports", ports}};
    if (a.dpg) ja["dpg"] = *a.dpg;
    actors.push_back(std::move(ja));
  }
  Json edges = Json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"id", e.id},
                     {"producer", {e.producer.actor, e.producer.port}},
                     {"consumer", {e.consumer.actor, e.consumer.port}},
                     {"token_size", e.token_size},
                     {"capacity", e.capacity},
                     {"initial_tokens", e.initial_tokens},
                     {"control", e.control}});
  }
  Json dpgs = Json::array();
  for (const auto& d : graph.dpgs) dpgs.push_back({{"id", d.id}, {"members", d.members}});
  return {{"name", graph.name}, {"actors", actors}, {"edges", edges}, {"dpgs", dpgs}};
}

std::string canonical_serialization(const ApplicationGraph& graph) {
  // nlohmann::json objects are key-sorted maps, so dump() is canonical.
  return to_json(graph).dump();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t compute_graph_hash(const ApplicationGraph& graph) {
  return fnv1a64(canonical_serialization(graph));
}

std::string hash_to_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::vector<RuleViolation> check_model_rules(const ApplicationGraph& g) {
  std::vector<RuleViolation> out;
  auto add = [&](std::string rule, std::string element, std::string msg) {
    out.push_back({std::move(rule), std::move(element), std::move(msg)});
  };

  // Which DPG(s) list each actor.
  std::map<std::string, std::vector<std::string>> listed_in;
  for (const auto& d : g.dpgs) {
    for (const auto& m : d.members) listed_in[m].push_back(d.id);
  }
  auto dpg_of = [&](const std::string& actor) -> std::optional<std::string> {
    auto it = listed_in.find(actor);
    if (it == listed_in.end() || it->second.empty()) return std::nullopt;
    return it->second.front();
  };

  // R1
  for (const auto& a : g.actors) {
    const auto& lists = listed_in[a.id];
    if (lists.size() > 1) {
      add("R1", a.id, "actor " + a.id + " is a member of more than one DPG");
      continue;
    }
    if (is_dynamic_kind(a.kind)) {
      if (!a.dpg || lists.empty()) {
        add("R1", a.id,
            std::string(to_string(a.kind)) + " actor " + a.id + " must be inside exactly one DPG");
      } else if (*a.dpg != lists.front()) {
        add("R1", a.id, "actor " + a.id + " names dpg " + *a.dpg + " but is listed in " + lists.front());
      }
    } else if (a.dpg && (lists.empty() || *a.dpg != lists.front())) {
      add("R1", a.id, "actor " + a.id + " names dpg " + *a.dpg + " but is not listed as its member");
    }
  }

  // R2, R3
  for (const auto& d : g.dpgs) {
    int cas = 0;
    int das = 0;
    const ActorSpec* ca = nullptr;
    for (const auto& m : d.members) {
      const ActorSpec* a = g.find_actor(m);
      if (a == nullptr) continue;
      if (a->kind == ActorKind::kCA) {
        ++cas;
        ca = a;
      }
      if (a->kind == ActorKind::kDA) ++das;
    }
    if (cas != 1 || das != 2) {
      add("R2", d.id,
          "dpg " + d.id + " must contain exactly one CA and two DAs (found " + std::to_string(cas) +
              " CA, " + std::to_string(das) + " DA)");
    }
    if (cas == 1) {
      for (const auto& m : d.members) {
        const ActorSpec* a = g.find_actor(m);
        if (a == nullptr || (a->kind != ActorKind::kDA && a->kind != ActorKind::kDPA)) continue;
        bool reached = std::any_of(g.edges.begin(), g.edges.end(), [&](const EdgeSpec& e) {
          return e.control && e.producer.actor == ca->id && e.consumer.actor == m;
        });
        if (!reached) {
          add("R3", m, "dpg " + d.id + ": no control edge from CA " + ca->id + " to " + m);
        }
      }
    }
  }
  // Dynamic ports need a control input to learn their rate.
  for (const auto& a : g.actors) {
    bool has_dynamic = std::any_of(a.ports.begin(), a.ports.end(),
                                   [](const PortSpec& p) { return p.dynamic; });
    if (!has_dynamic || a.kind == ActorKind::kCA) continue;
    bool controlled = std::any_of(g.edges.begin(), g.edges.end(), [&](const EdgeSpec& e) {
      return e.control && e.consumer.actor == a.id;
    });
    if (!controlled && dpg_of(a.id)) {
      bool already = std::any_of(out.begin(), out.end(), [&](const RuleViolation& v) {
        return v.rule == "R3" && v.element == a.id;
      });
      if (!already) add("R3", a.id, "actor " + a.id + " has dynamic ports but no control input");
    }
  }

  // R4, R5
  for (const auto& e : g.edges) {
    const ActorSpec* pa = g.find_actor(e.producer.actor);
    const ActorSpec* ca = g.find_actor(e.consumer.actor);
    if (pa == nullptr || ca == nullptr) continue;
    const PortSpec* pp = pa->find_port(e.producer.port);
    const PortSpec* cp = ca->find_port(e.consumer.port);
    if (pp == nullptr || cp == nullptr) continue;
    if (!e.control) {
      auto pd = dpg_of(pa->id);
      auto cd = dpg_of(ca->id);
      if (pd != cd) {
        auto boundary_ok = [](const ActorSpec& a, const PortSpec& p) {
          return a.kind == ActorKind::kDA && !p.dynamic;
        };
        bool ok = (!pd || boundary_ok(*pa, *pp)) && (!cd || boundary_ok(*ca, *cp));
        if (!ok) {
          add("R4", e.id, "edge " + e.id + " crosses a DPG boundary without a DA static port");
        }
      }
    }
    if (pp->lrl != cp->lrl || pp->url != cp->url) {
      add("R5", e.id, "symmetric rate ranges violated on edge " + e.id);
    }
  }
  return out;
}

PlatformGraph platform_graph_from_json(const Json& doc) {
  PlatformGraph p;
  ObjectReader root(doc, "platform");
  const Json& devices = root.array("devices");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    ObjectReader r(devices[i], "devices[" + std::to_string(i) + "]");
    Device d;
    d.id = r.string("id");
    for (const auto& u : r.array("units")) {
      if (!u.is_string()) r.fail("units must be strings");
      d.units.push_back(u.get<std::string>());
    }
    std::string address = r.optional_string("address").value_or("127.0.0.1");
    auto colon = address.rfind(':');
    if (colon == std::string::npos) {
      d.host = address;
    } else {
      d.host = address.substr(0, colon);
      std::string port = address.substr(colon + 1);
      unsigned value = 0;
      auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
      if (ec != std::errc{} || ptr != port.data() + port.size() || value > 65535) {
        r.fail("address port base must be an integer in [0, 65535]");
      }
      d.base_port = static_cast<std::uint16_t>(value);
    }
    if (d.host.empty()) r.fail("address host must not be empty");
    r.finish();
    require_id(d.id, "device");
    if (p.find_device(d.id) != nullptr) invalid("unique", d.id, "duplicate device id " + d.id);
    if (d.units.empty()) invalid("units", d.id, "device " + d.id + " lists no processing units");
    p.devices.push_back(std::move(d));
  }
  if (const Json* links = root.optional("links")) {
    if (!links->is_array()) root.fail("'links' must be an array");
    for (const auto& l : *links) {
      if (!l.is_array() || l.size() != 2 || !l[0].is_string() || !l[1].is_string()) {
        root.fail("links must be [deviceA, deviceB] pairs");
      }
      std::string a = l[0].get<std::string>();
      std::string b = l[1].get<std::string>();
      for (const auto& end : {a, b}) {
        if (p.find_device(end) == nullptr) {
          invalid("dangling-link", end, "link references unknown device " + end);
        }
      }
      p.links.emplace_back(a, b);
    }
  }
  root.finish();
  return p;
}

PlatformGraph parse_platform_graph(std::string_view text) {
  return platform_graph_from_json(parse_json(text));
}

Json to_json(const PlatformGraph& platform) {
  Json devices = Json::array();
  for (const auto& d : platform.devices) {
    std::string address = d.host;
    if (d.base_port != 0) address += ":" + std::to_string(d.base_port);
    devices.push_back({{"id", d.id}, {"units", d.units}, {"address", address}});
  }
  Json links = Json::array();
  for (const auto& [a, b] : platform.links) links.push_back({a, b});
  return {{"devices", devices}, {"links", links}};
}

Mapping mapping_from_json(const Json& doc, const ApplicationGraph& graph,
                          const PlatformGraph& platform) {
  Mapping m;
  ObjectReader root(doc, "mapping");
  const Json& assignments = root.required("assignments");
  if (!assignments.is_object()) root.fail("'assignments' must be an object");
  for (auto it = assignments.begin(); it != assignments.end(); ++it) {
    const std::string& actor = it.key();
    const Json& v = it.value();
    if (!v.is_array() || v.size() != 2 || !v[0].is_string() || !v[1].is_string()) {
      root.fail("assignment for " + actor + " must be [device, unit]");
    }
    Placement place{v[0].get<std::string>(), v[1].get<std::string>()};
    if (graph.find_actor(actor) == nullptr) invalid("mapping", actor, "unknown actor " + actor);
    const Device* d = platform.find_device(place.device);
    if (d == nullptr) invalid("mapping", actor, "actor " + actor + ": unknown device " + place.device);
    if (std::find(d->units.begin(), d->units.end(), place.unit) == d->units.end()) {
      invalid("mapping", actor,
              "actor " + actor + ": device " + place.device + " has no unit " + place.unit);
    }
    m.assignments.emplace(actor, std::move(place));
  }
  root.finish();
  for (const auto& a : graph.actors) {
    if (!m.assignments.contains(a.id)) invalid("mapping", a.id, "unmapped actor " + a.id);
  }
  return m;
}

Mapping parse_mapping(std::string_view text, const ApplicationGraph& graph,
                      const PlatformGraph& platform) {
  return mapping_from_json(parse_json(text), graph, platform);
}

Json to_json(const Mapping& mapping) {
  Json a = Json::object();
  for (const auto& [actor, place] : mapping.assignments) a[actor] = {place.device, place.unit};
  return {{"assignments", a}};
}

std::vector<const EdgeSpec*> cut_edges(const ApplicationGraph& graph, const Mapping& mapping) {
  std::vector<const EdgeSpec*> out;
  for (const auto& e : graph.edges) {
    if (mapping.at(e.producer.actor).device != mapping.at(e.consumer.actor).device) {
      out.push_back(&e);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const EdgeSpec* a, const EdgeSpec* b) { return a->id < b->id; });
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed: " + path);
}

}  // namespace edgeprune
