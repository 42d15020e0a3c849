#include "edgeprune/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "edgeprune/error.hpp"

namespace edgeprune {

namespace {

using net::Clock;

Micros to_us(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::microseconds>(t.time_since_epoch()).count();
}

Micros now_us() { return to_us(Clock::now()); }

// Tracks which frames every terminal of this device has finished and gates
// sources so that at most max_in_flight frames are outstanding.
class FrameTracker {
 public:
  FrameTracker(std::size_t terminals, std::size_t max_in_flight)
      : terminals_(terminals), max_in_flight_(max_in_flight) {}

  /// Blocks until frame `index` may start. Returns false once the run stops.
  bool wait_credit(std::uint64_t index) {
    if (max_in_flight_ == 0) return true;
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return released_ || contiguous_ + max_in_flight_ > index; });
    return contiguous_ + max_in_flight_ > index || released_;
  }

  void acquired(std::uint64_t index, Micros at) {
    std::lock_guard lock(mu_);
    auto& f = frame(index);
    if (!f.acquired || at < *f.acquired) f.acquired = at;
  }

  void feedback(std::uint64_t index, Micros at) {
    std::lock_guard lock(mu_);
    frame(index).feedback = at;
  }

  void commit(std::uint64_t index, Micros at) {
    std::lock_guard lock(mu_);
    if (++commits_[index] < terminals_) return;
    auto& f = frame(index);
    if (!f.committed || at > *f.committed) f.committed = at;
    while (commits_.contains(contiguous_) && commits_[contiguous_] >= terminals_) ++contiguous_;
    cv_.notify_all();
  }

  /// A terminal finished (normally or not); nothing further is worth gating on.
  void release() {
    std::lock_guard lock(mu_);
    released_ = true;
    cv_.notify_all();
  }

  std::uint64_t frames_processed() const {
    std::lock_guard lock(mu_);
    return contiguous_;
  }

  std::vector<FrameTiming> timings() const {
    std::lock_guard lock(mu_);
    std::vector<FrameTiming> out;
    for (const auto& [index, f] : frames_) out.push_back(f);
    return out;
  }

 private:
  FrameTiming& frame(std::uint64_t index) {
    auto& f = frames_[index];
    f.index = index;
    return f;
  }

  std::size_t terminals_;
  std::size_t max_in_flight_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::uint64_t, std::size_t> commits_;
  std::map<std::uint64_t, FrameTiming> frames_;
  std::uint64_t contiguous_ = 0;
  bool released_ = false;
};

struct InPort {
  const PortSpec* spec = nullptr;
  Fifo* fifo = nullptr;
  std::uint32_t initial_tokens = 0;
};

struct OutPort {
  const PortSpec* spec = nullptr;
  Fifo* fifo = nullptr;
};

struct ActorRun {
  const ActorSpec* spec = nullptr;
  std::unique_ptr<Kernel> kernel;
  std::vector<InPort> control_in;
  std::vector<InPort> feedback_in;
  std::vector<InPort> data_in;   // kernel-facing, declaration order
  std::vector<OutPort> data_out;  // kernel-facing, includes control outputs
  std::vector<OutPort> feedback_out;
  bool source = false;
  bool terminal = false;
  const NetEdge* net = nullptr;
  std::optional<net::TxEndpoint> tx;
  std::optional<net::RxEndpoint> rx;
  ActorStats stats;
};

class Program {
 public:
  Program(const DeploymentManifest& m, const KernelRegistry& registry, const RunOptions& options)
      : manifest_(m), registry_(registry), options_(options) {}

  RunStats run() {
    RunStats stats;
    stats.device = manifest_.device;
    stats.started = now_us();
    try {
      build();
      if (startup()) execute();
    } catch (const std::exception& e) {
      fail(e.what());
    }
    stats.finished = now_us();
    collect(stats);
    return stats;
  }

 private:
  void fail(const std::string& message) {
    std::lock_guard lock(errors_mu_);
    errors_.push_back(message);
  }

  void build() {
    const auto& g = manifest_.subgraph;
    for (const auto& e : g.edges) {
      auto [it, inserted] = fifos_.emplace(
          e.id, std::make_unique<Fifo>(e.id, e.token_size, e.capacity, e.initial_tokens));
      if (!inserted) throw Error("duplicate edge " + e.id + " in manifest");
    }
    std::map<std::string, const NetEdge*> net_by_actor;
    for (const auto& ne : manifest_.net_edges) net_by_actor[ne.fifo_actor] = &ne;

    std::size_t terminals = 0;
    for (const auto& a : g.actors) {
      auto run = std::make_unique<ActorRun>();
      run->spec = &a;
      run->stats.id = a.id;
      run->stats.kind = std::string(to_string(a.kind));
      for (const auto& p : a.ports) {
        const EdgeSpec* e = g.edge_at(a.id, p.id);
        if (e == nullptr) throw Error("actor " + a.id + ": port " + p.id + " is not connected");
        Fifo* f = fifos_.at(e->id).get();
        if (p.direction == Direction::kInput) {
          InPort in{&p, f, e->initial_tokens};
          if (p.is_feedback()) {
            run->feedback_in.push_back(in);
          } else if (e->control) {
            run->control_in.push_back(in);
          } else {
            run->data_in.push_back(in);
          }
        } else {
          OutPort out{&p, f};
          (p.is_feedback() ? run->feedback_out : run->data_out).push_back(out);
        }
      }
      if (a.kind == ActorKind::kTXF || a.kind == ActorKind::kRXF) {
        auto it = net_by_actor.find(a.id);
        if (it == net_by_actor.end()) throw Error("FIFO actor " + a.id + " has no network edge");
        run->net = it->second;
        bool tx = a.kind == ActorKind::kTXF;
        if ((tx ? run->data_in.size() + run->feedback_in.size()
                : run->data_out.size() + run->feedback_out.size()) != 1) {
          throw Error("FIFO actor " + a.id + " must have exactly one local port");
        }
        run->terminal = tx;
      } else {
        run->source = a.kind != ActorKind::kCA && run->data_in.empty() && run->control_in.empty();
        run->terminal = run->data_out.empty();
        KernelSetup setup;
        setup.actor_id = a.id;
        setup.kernel = a.kernel;
        setup.params = a.kernel_params;
        setup.base_dir = options_.base_dir;
        setup.frames = options_.frames;
        auto info = [&](const PortSpec* p) {
          const EdgeSpec* e = g.edge_at(a.id, p->id);
          return PortInfo{p->id, e->token_size, p->lrl, p->url, p->dynamic};
        };
        for (const auto& in : run->data_in) setup.inputs.push_back(info(in.spec));
        for (const auto& out : run->data_out) setup.outputs.push_back(info(out.spec));
        run->kernel = registry_.create(setup);
      }
      if (run->terminal) ++terminals;
      actors_.push_back(std::move(run));
    }
    tracker_ = std::make_unique<FrameTracker>(terminals, options_.max_in_flight);
  }

  // Binds every RX listener, then connects TX and accepts RX concurrently.
  bool startup() {
    std::map<std::string, std::unique_ptr<net::RxListener>> listeners;
    for (auto& a : actors_) {
      if (a->net == nullptr || a->net->role != NetRole::kRx) continue;
      const NetEdge& ne = *a->net;
      listeners[a->spec->id] = std::make_unique<net::RxListener>(ne.edge, ne.port, ne.edge_index,
                                                                 ne.token_size, manifest_.graph_hash);
    }
    std::atomic<bool> cancel{false};
    std::vector<std::thread> threads;
    std::mutex mu;
    std::vector<std::string> failures;
    for (auto& a : actors_) {
      if (a->net == nullptr) continue;
      ActorRun* run = a.get();
      net::RxListener* listener =
          run->net->role == NetRole::kRx ? listeners.at(run->spec->id).get() : nullptr;
      threads.emplace_back([&, run, listener] {
        try {
          const NetEdge& ne = *run->net;
          if (ne.role == NetRole::kTx) {
            run->tx.emplace(net::TxEndpoint::connect(ne.edge, ne.host, ne.port,
                                                     {manifest_.graph_hash, ne.edge_index},
                                                     ne.token_size, options_.shape,
                                                     options_.connect_timeout, &cancel));
            if (auto d = options_.drop_frames.find(ne.edge); d != options_.drop_frames.end()) {
              run->tx->drop_seq(d->second);
            }
          } else {
            run->rx.emplace(listener->accept(options_.connect_timeout, &cancel));
          }
        } catch (const std::exception& e) {
          std::lock_guard lock(mu);
          if (!cancel.exchange(true) || failures.empty()) failures.push_back(e.what());
        }
      });
    }
    for (auto& t : threads) t.join();
    if (!failures.empty()) {
      for (const auto& f : failures) fail("startup barrier failed: " + f);
      return false;
    }
    return true;
  }

  void execute() {
    std::vector<std::thread> threads;
    for (auto& a : actors_) {
      ActorRun* run = a.get();
      threads.emplace_back([this, run] { actor_thread(*run); });
    }
    for (auto& t : threads) t.join();
  }

  void actor_thread(ActorRun& run) {
    std::string error;
    try {
      if (run.spec->kind == ActorKind::kTXF) {
        tx_loop(run);
      } else if (run.spec->kind == ActorKind::kRXF) {
        rx_loop(run);
      } else {
        kernel_loop(run, error);
      }
    } catch (const FifoAborted&) {
      error = "aborted";
    } catch (const NetError& e) {
      error = e.what();
      fail(error);
    } catch (const std::exception& e) {
      error = "actor " + run.spec->id + ": " + e.what();
      fail(error);
    }
    if (!error.empty() && run.tx) run.tx->close();
    for (auto& o : run.data_out) o.fifo->push_eos(error);
    for (auto& o : run.feedback_out) o.fifo->push_eos(error);
    for (auto* group : {&run.control_in, &run.feedback_in, &run.data_in}) {
      for (auto& i : *group) i.fifo->close();
    }
    if (run.terminal) tracker_->release();
  }

  static std::optional<std::string> upstream_error(const InPort& in) { return in.fifo->eos_error(); }

  // Returns false when the input reached end of stream; `error` carries an
  // upstream failure so it can be forwarded.
  static bool pop_into(const InPort& in, std::size_t count, std::vector<Token>& out, std::string& error) {
    auto tokens = in.fifo->pop(count);
    if (!tokens) {
      if (auto e = upstream_error(in)) error = *e;
      return false;
    }
    out = std::move(*tokens);
    return true;
  }

  void kernel_loop(ActorRun& run, std::string& error) {
    run.kernel->init();
    struct Deinit {
      Kernel& k;
      ~Deinit() { k.deinit(); }
    } deinit{*run.kernel};

    for (std::uint64_t frame = 0;; ++frame) {
      if (run.source && !tracker_->wait_credit(frame)) return;

      std::optional<std::uint32_t> rate;
      for (const auto& c : run.control_in) {
        std::vector<Token> t;
        if (!pop_into(c, 1, t, error)) return;
        std::uint32_t r = decode_rate_token(t.at(0));
        if (rate && *rate != r) throw Error("conflicting control tokens (" + std::to_string(*rate) + " vs " +
                                            std::to_string(r) + ")");
        rate = r;
      }
      auto rate_of = [&](const PortSpec& p) -> std::uint32_t {
        std::uint32_t atr = p.url;
        if (p.dynamic) {
          if (!rate) throw Error("dynamic port " + p.id + " has no control token");
          atr = *rate;
        }
        if (atr < p.lrl || atr > p.url) {
          ++violations_;
          throw Error("rate violation on port " + p.id + ": atr " + std::to_string(atr) + " outside [" +
                      std::to_string(p.lrl) + ", " + std::to_string(p.url) + "]");
        }
        return atr;
      };

      FiringContext ctx;
      ctx.frame_index = frame;
      bool any_nonzero = run.data_in.empty() && run.data_out.empty();
      for (const auto& in : run.data_in) {
        ctx.input_rates.push_back(rate_of(*in.spec));
        any_nonzero |= ctx.input_rates.back() > 0;
      }
      for (const auto& out : run.data_out) {
        ctx.output_rates.push_back(rate_of(*out.spec));
        any_nonzero |= ctx.output_rates.back() > 0;
      }

      for (const auto& fb : run.feedback_in) {
        std::vector<Token> t;
        if (!pop_into(fb, 1, t, error)) return;
        if (frame >= fb.initial_tokens) tracker_->feedback(frame - fb.initial_tokens, now_us());
      }
      ctx.inputs.resize(run.data_in.size());
      for (std::size_t i = 0; i < run.data_in.size(); ++i) {
        if (!pop_into(run.data_in[i], ctx.input_rates[i], ctx.inputs[i], error)) return;
      }
      ctx.outputs.resize(run.data_out.size());

      Micros start = now_us();
      if (!any_nonzero) {
        ++run.stats.skipped;
      } else {
        if (run.kernel->fire(ctx) == FireStatus::kEndOfStream) return;
        ++run.stats.firings;
      }
      if (run.source) tracker_->acquired(frame, start);
      Micros end = now_us();
      run.stats.busy_ms += static_cast<double>(end - start) / 1000.0;
      if (options_.record_firings) run.stats.log.push_back({frame, start, end});

      bool closed = false;
      for (std::size_t o = 0; o < run.data_out.size(); ++o) {
        auto& tokens = ctx.outputs[o];
        if (tokens.size() != ctx.output_rates[o]) {
          throw Error("kernel produced " + std::to_string(tokens.size()) + " tokens on port " +
                      run.data_out[o].spec->id + ", expected " + std::to_string(ctx.output_rates[o]));
        }
        if (tokens.empty()) continue;
        closed |= run.data_out[o].fifo->push(std::move(tokens)) == PushStatus::kClosed;
      }
      if (run.terminal) tracker_->commit(frame, now_us());
      for (auto& fb : run.feedback_out) {
        Token t = encode_rate_token(static_cast<std::uint32_t>(frame));
        t.resize(fb.fifo->token_size(), 0);
        closed |= fb.fifo->push({std::move(t)}) == PushStatus::kClosed;
      }
      if (closed) return;
    }
  }

  void tx_loop(ActorRun& run) {
    const InPort& in = run.data_in.empty() ? run.feedback_in.at(0) : run.data_in.at(0);
    for (std::uint64_t frame = 0;; ++frame) {
      auto tokens = in.fifo->pop(run.net->url);
      if (!tokens) {
        if (auto e = in.fifo->eos_error()) {
          // upstream failed: drop the connection so the peer sees the failure
          run.tx->close();
          return;
        }
        run.tx->send_eos();
        return;
      }
      auto ready = Clock::now();
      run.tx->send(*tokens, ready);
      const auto& rec = run.tx->records().back();
      ++run.stats.firings;
      run.stats.busy_ms += std::chrono::duration<double, std::milli>(rec.end - rec.start).count();
      if (options_.record_firings) run.stats.log.push_back({frame, to_us(rec.start), to_us(rec.end)});
      tracker_->commit(frame, to_us(rec.end));
    }
  }

  void rx_loop(ActorRun& run) {
    const OutPort& out = run.data_out.empty() ? run.feedback_out.at(0) : run.data_out.at(0);
    bool closed = false;
    for (std::uint64_t frame = 0;; ++frame) {
      wire::Frame f = run.rx->receive();
      if (f.eos()) return;
      ++run.stats.firings;
      if (options_.record_firings) {
        Micros at = to_us(run.rx->records().back().at);
        run.stats.log.push_back({frame, at, at});
      }
      // keep draining after the consumer left so the sender can finish cleanly
      if (!closed) closed = out.fifo->push(std::move(f.tokens)) == PushStatus::kClosed;
    }
  }

  void collect(RunStats& stats) {
    {
      std::lock_guard lock(errors_mu_);
      stats.errors = errors_;
    }
    stats.ok = stats.errors.empty();
    stats.rate_violations = violations_.load();
    if (tracker_) {
      stats.frames_processed = tracker_->frames_processed();
      stats.frames = tracker_->timings();
    }
    for (auto& a : actors_) {
      stats.actors.push_back(a->stats);
      if (a->net == nullptr) continue;
      NetStats ns;
      ns.edge = a->net->edge;
      ns.role = std::string(to_string(a->net->role));
      ns.port = a->net->port;
      if (a->tx) {
        for (const auto& r : a->tx->records()) {
          ns.sends.push_back({r.seq, r.bytes, to_us(r.ready), to_us(r.start), to_us(r.end)});
          ns.bytes += r.bytes;
        }
        ns.frames = ns.sends.size();
      }
      if (a->rx) {
        for (const auto& r : a->rx->records()) ns.receives.emplace_back(r.seq, to_us(r.at));
        ns.frames = ns.receives.size();
      }
      stats.net.push_back(std::move(ns));
    }
    for (const auto& e : manifest_.subgraph.edges) {
      auto it = fifos_.find(e.id);
      if (it == fifos_.end()) continue;
      FifoCounters c = it->second->counters();
      stats.edges.push_back({e.id, c.produced, c.consumed, c.drained, c.discarded_partial,
                             c.peak_occupancy, c.capacity, c.initial_tokens});
    }
  }

  const DeploymentManifest& manifest_;
  const KernelRegistry& registry_;
  const RunOptions& options_;
  std::map<std::string, std::unique_ptr<Fifo>> fifos_;
  std::vector<std::unique_ptr<ActorRun>> actors_;
  std::unique_ptr<FrameTracker> tracker_;
  std::mutex errors_mu_;
  std::vector<std::string> errors_;
  std::atomic<std::uint64_t> violations_{0};
};

}  // namespace

RunStats run_program(const DeploymentManifest& manifest, const KernelRegistry& registry,
                     const RunOptions& options) {
  Program program(manifest, registry, options);
  return program.run();
}

}  // namespace edgeprune
