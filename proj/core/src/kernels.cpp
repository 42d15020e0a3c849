#include "edgeprune/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "edgeprune/error.hpp"
#include "edgeprune/rng.hpp"

namespace edgeprune {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t param_uint(const KernelSetup& s, const char* key, std::uint64_t fallback) {
  auto it = s.params.find(key);
  if (it == s.params.end()) return fallback;
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
    throw Error("actor " + s.actor_id + ": kernel param '" + key + "' must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

double param_double(const Json& params, const std::string& where, const char* key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (!it->is_number()) throw Error(where + ": param '" + key + "' must be a number");
  return it->get<double>();
}

std::string param_string(const KernelSetup& s, const char* key) {
  auto it = s.params.find(key);
  if (it == s.params.end()) return {};
  if (!it->is_string()) throw Error("actor " + s.actor_id + ": kernel param '" + key + "' must be a string");
  return it->get<std::string>();
}

std::filesystem::path resolve(const KernelSetup& s, const std::string& path) {
  std::filesystem::path p(path);
  return p.is_absolute() ? p : s.base_dir / p;
}

void require_ports(const KernelSetup& s, std::size_t min_in, std::size_t max_in, std::size_t min_out,
                   std::size_t max_out) {
  if (s.inputs.size() < min_in || s.inputs.size() > max_in || s.outputs.size() < min_out ||
      s.outputs.size() > max_out) {
    throw Error("actor " + s.actor_id + ": kernel '" + s.kernel + "' does not accept " +
                std::to_string(s.inputs.size()) + " inputs / " + std::to_string(s.outputs.size()) +
                " outputs");
  }
}

std::vector<std::uint8_t> concat(const std::vector<std::vector<Token>>& inputs) {
  std::vector<std::uint8_t> all;
  for (const auto& port : inputs)
    for (const auto& t : port) all.insert(all.end(), t.begin(), t.end());
  return all;
}

void emit_bytes(FiringContext& ctx, const std::vector<PortInfo>& outputs,
                const std::vector<std::uint8_t>& bytes) {
  for (std::size_t o = 0; o < outputs.size(); ++o) {
    ctx.outputs[o].clear();
    for (std::uint32_t k = 0; k < ctx.output_rates[o]; ++k) {
      ctx.outputs[o].push_back(resize_cyclic(bytes, outputs[o].token_size));
    }
  }
}

// --- calibration -----------------------------------------------------------

std::uint64_t chunk_iterations() {
  static std::once_flag once;
  static std::uint64_t iterations = 1000;
  std::call_once(once, [] {
    volatile double sink = 0;
    double x = 1.0;
    std::uint64_t n = 0;
    auto start = Clock::now();
    while (Clock::now() - start < std::chrono::milliseconds(5)) {
      for (int i = 0; i < 1000; ++i) x = x * 1.0000001 + 1e-9;
      n += 1000;
    }
    sink = x;
    (void)sink;
    double per_us = static_cast<double>(n) / 5000.0;
    iterations = std::max<std::uint64_t>(100, static_cast<std::uint64_t>(per_us * 20.0));
  });
  return iterations;
}

// --- kernels ---------------------------------------------------------------

class SourceKernel : public Kernel {
 public:
  explicit SourceKernel(const KernelSetup& s) : setup_(s) {
    require_ports(s, 0, 0, 1, 1);
    seed_ = param_uint(s, "seed", 0);
    path_ = param_string(s, "path");
    frames_ = s.frames.value_or(param_uint(s, "frames", 1));
  }

  void init() override {
    if (path_.empty()) return;
    auto p = resolve(setup_, path_);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("actor " + setup_.actor_id + ": cannot open source file " + p.string());
    data_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    std::size_t frame_bytes = setup_.outputs[0].token_size * setup_.outputs[0].url;
    if (data_.size() < frames_ * frame_bytes) {
      throw Error("actor " + setup_.actor_id + ": short file " + p.string() + " holds " +
                  std::to_string(data_.size() / frame_bytes) + " frames, " + std::to_string(frames_) +
                  " requested");
    }
  }

  FireStatus fire(FiringContext& ctx) override {
    if (emitted_ >= frames_) return FireStatus::kEndOfStream;
    const std::size_t size = setup_.outputs[0].token_size;
    auto& out = ctx.outputs[0];
    out.clear();
    for (std::uint32_t k = 0; k < ctx.output_rates[0]; ++k) {
      if (path_.empty()) {
        out.push_back(synthetic_token(seed_, emitted_, k, size));
      } else {
        std::size_t off = (emitted_ * setup_.outputs[0].url + k) * size;
        out.emplace_back(data_.begin() + static_cast<std::ptrdiff_t>(off),
                         data_.begin() + static_cast<std::ptrdiff_t>(off + size));
      }
    }
    ++emitted_;
    return FireStatus::kOk;
  }

 private:
  KernelSetup setup_;
  std::uint64_t seed_ = 0;
  std::string path_;
  std::uint64_t frames_ = 0;
  std::uint64_t emitted_ = 0;
  std::vector<std::uint8_t> data_;
};

// Writes every received token verbatim, in port order, to `path`.
class TokenWriter {
 public:
  TokenWriter(const KernelSetup& s, const std::string& path) : actor_(s.actor_id) {
    if (!path.empty()) path_ = resolve(s, path);
  }
  void open() {
    if (path_.empty()) return;
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("actor " + actor_ + ": cannot write " + path_.string());
  }
  void write(const std::vector<std::uint8_t>& bytes) {
    if (!out_.is_open()) return;
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out_) throw Error("actor " + actor_ + ": write failed on " + path_.string());
  }
  void close() {
    if (out_.is_open()) out_.close();
  }

 private:
  std::string actor_;
  std::filesystem::path path_;
  std::ofstream out_;
};

class SinkKernel : public Kernel {
 public:
  explicit SinkKernel(const KernelSetup& s) : writer_(s, param_string(s, "path")) {
    require_ports(s, 0, 64, 0, 0);
  }
  void init() override { writer_.open(); }
  FireStatus fire(FiringContext& ctx) override {
    for (const auto& port : ctx.inputs)
      for (const auto& t : port) writer_.write(t);
    return FireStatus::kOk;
  }
  void deinit() override { writer_.close(); }

 private:
  TokenWriter writer_;
};

class IdentityKernel : public Kernel {
 public:
  explicit IdentityKernel(const KernelSetup& s) : setup_(s) {
    if (s.inputs.empty() || (s.inputs.size() != 1 && s.inputs.size() != s.outputs.size())) {
      throw Error("actor " + s.actor_id + ": identity needs one input or one input per output");
    }
    for (std::size_t o = 0; o < s.outputs.size(); ++o) {
      const auto& in = s.inputs[s.inputs.size() == 1 ? 0 : o];
      if (in.token_size != s.outputs[o].token_size) {
        throw Error("actor " + s.actor_id + ": identity port " + s.outputs[o].id +
                    " token size differs from its input");
      }
    }
  }
  FireStatus fire(FiringContext& ctx) override {
    for (std::size_t o = 0; o < ctx.outputs.size(); ++o) {
      std::size_t i = ctx.inputs.size() == 1 ? 0 : o;
      if (ctx.inputs[i].size() != ctx.output_rates[o]) {
        throw Error("actor " + setup_.actor_id + ": identity rate mismatch on " + setup_.outputs[o].id);
      }
      ctx.outputs[o] = ctx.inputs.size() == 1 ? ctx.inputs[0] : std::move(ctx.inputs[o]);
    }
    return FireStatus::kOk;
  }

 private:
  KernelSetup setup_;
};

class BusyworkKernel : public Kernel {
 public:
  explicit BusyworkKernel(const KernelSetup& s) : setup_(s) {
    ms_ = param_double(s.params, "actor " + s.actor_id, "ms", 0.0);
    if (ms_ < 0) throw Error("actor " + s.actor_id + ": busywork ms must be >= 0");
  }
  FireStatus fire(FiringContext& ctx) override {
    busywork(ms_);
    if (ctx.inputs.size() == 1 && ctx.outputs.size() == 1 &&
        ctx.inputs[0].size() == ctx.output_rates[0] &&
        setup_.inputs[0].token_size == setup_.outputs[0].token_size) {
      ctx.outputs[0] = std::move(ctx.inputs[0]);
      return FireStatus::kOk;
    }
    emit_bytes(ctx, setup_.outputs, concat(ctx.inputs));
    return FireStatus::kOk;
  }

 private:
  KernelSetup setup_;
  double ms_ = 0;
};

// A stack of layers applied to the (concatenated) input tensor.
class SequenceKernel : public Kernel {
 public:
  SequenceKernel(const KernelSetup& s, Json layers) : setup_(s), writer_(s, param_string(s, "path")) {
    if (s.inputs.empty()) throw Error("actor " + s.actor_id + ": " + s.kernel + " needs an input");
    std::size_t in_bytes = 0;
    for (const auto& p : s.inputs) in_bytes += p.token_size * p.url;
    if (in_bytes % 4 != 0) throw Error("actor " + s.actor_id + ": input is not a float32 tensor");
    if (auto it = s.params.find("input_shape"); it != s.params.end()) {
      input_shape_.dims = it->get<std::vector<std::size_t>>();
      if (input_shape_.bytes() != in_bytes) {
        throw Error("actor " + s.actor_id + ": shape mismatch: input_shape " + input_shape_.str() +
                    " is " + std::to_string(input_shape_.bytes()) + " bytes, inputs carry " +
                    std::to_string(in_bytes));
      }
    } else {
      input_shape_.dims = {in_bytes / 4};
    }
    Shape shape = input_shape_;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const Json& l = layers[i];
      std::string op = l.at("op").get<std::string>();
      std::string where = "actor " + s.actor_id + " layer " + std::to_string(i) + " (" + op + ")";
      Layer layer{op, {}, {}, 0.0};
      std::uint64_t seed = l.value("seed", std::uint64_t{0}) ^ (static_cast<std::uint64_t>(i) << 32);
      if (op == "conv2d") {
        if (!shape.is_hwc()) throw Error(where + ": shape mismatch, needs HxWxC input");
        std::size_t filters = l.at("filters").get<std::size_t>();
        std::size_t k = l.value("kernel_size", std::size_t{5});
        layer.conv = l.contains("weights_file")
                         ? ConvWeights::from_file(resolve(s, l["weights_file"]).string(), filters, k,
                                                  shape.channels())
                         : ConvWeights::seeded(filters, k, shape.channels(), seed);
        layer.conv.pack();
      } else if (op == "dense") {
        std::size_t units = l.at("units").get<std::size_t>();
        layer.dense = l.contains("weights_file")
                          ? DenseWeights::from_file(resolve(s, l["weights_file"]).string(), units,
                                                    shape.elements())
                          : DenseWeights::seeded(units, shape.elements(), seed);
        layer.dense.pack();
      } else if (op == "busywork") {
        layer.ms = param_double(l, where, "ms", 0.0);
      }
      shape = sequence_output_shape(Json::array({l}), shape);
      layers_.push_back(std::move(layer));
    }
    output_shape_ = shape;
    for (const auto& o : s.outputs) {
      if (o.token_size * o.url != output_shape_.bytes()) {
        throw Error("actor " + s.actor_id + ": shape mismatch: output " + output_shape_.str() + " is " +
                    std::to_string(output_shape_.bytes()) + " bytes, port " + o.id + " carries " +
                    std::to_string(o.token_size * o.url));
      }
    }
  }

  void init() override { writer_.open(); }
  void deinit() override { writer_.close(); }

  FireStatus fire(FiringContext& ctx) override {
    Tensor t(input_shape_, decode_floats(concat(ctx.inputs)));
    for (const auto& l : layers_) {
      if (l.op == "conv2d") {
        t = ops::conv2d(t, l.conv);
      } else if (l.op == "maxpool2") {
        t = ops::maxpool2(t);
      } else if (l.op == "relu") {
        t = ops::relu(std::move(t));
      } else if (l.op == "dense") {
        t = ops::dense(t, l.dense);
      } else if (l.op == "softmax") {
        t = ops::softmax(t);
      } else if (l.op == "busywork") {
        busywork(l.ms);
      }
    }
    auto bytes = encode_floats(t.data);
    if (setup_.outputs.empty()) {
      writer_.write(bytes);
      return FireStatus::kOk;
    }
    for (std::size_t o = 0; o < setup_.outputs.size(); ++o) {
      ctx.outputs[o].clear();
      std::size_t size = setup_.outputs[o].token_size;
      for (std::uint32_t k = 0; k < ctx.output_rates[o]; ++k) {
        auto first = bytes.begin() + static_cast<std::ptrdiff_t>(k * size);
        ctx.outputs[o].emplace_back(first, first + static_cast<std::ptrdiff_t>(size));
      }
    }
    return FireStatus::kOk;
  }

 private:
  struct Layer {
    std::string op;
    ConvWeights conv;
    DenseWeights dense;
    double ms;
  };
  KernelSetup setup_;
  TokenWriter writer_;
  Shape input_shape_;
  Shape output_shape_;
  std::vector<Layer> layers_;
};

// Configuration actor: one rate per firing, broadcast as a control token to
// every output. Rates come from a cyclic list or a seeded draw in [min, max].
class ConfigKernel : public Kernel {
 public:
  explicit ConfigKernel(const KernelSetup& s) : setup_(s), rng_(param_uint(s, "seed", 0)) {
    if (auto it = s.params.find("rates"); it != s.params.end()) {
      rates_ = it->get<std::vector<std::uint32_t>>();
      if (rates_.empty()) throw Error("actor " + s.actor_id + ": 'rates' must not be empty");
    }
    min_ = static_cast<std::uint32_t>(param_uint(s, "min", 0));
    max_ = static_cast<std::uint32_t>(param_uint(s, "max", 1));
    if (min_ > max_) throw Error("actor " + s.actor_id + ": min > max");
    if (s.params.contains("frames")) frames_ = param_uint(s, "frames", 0);
    if (s.frames && s.inputs.empty()) frames_ = s.frames;
    for (const auto& o : s.outputs) {
      if (o.token_size != 4) throw Error("actor " + s.actor_id + ": control outputs carry 4-byte tokens");
    }
  }
  FireStatus fire(FiringContext& ctx) override {
    if (frames_ && fired_ >= *frames_) return FireStatus::kEndOfStream;
    std::uint32_t rate = rates_.empty() ? static_cast<std::uint32_t>(rng_.uniform(min_, max_))
                                        : rates_[fired_ % rates_.size()];
    ++fired_;
    for (std::size_t o = 0; o < ctx.outputs.size(); ++o) {
      ctx.outputs[o].assign(ctx.output_rates[o], encode_rate_token(rate));
    }
    return FireStatus::kOk;
  }

 private:
  KernelSetup setup_;
  Xoshiro256 rng_;
  std::vector<std::uint32_t> rates_;
  std::uint32_t min_ = 0;
  std::uint32_t max_ = 1;
  std::optional<std::uint64_t> frames_;
  std::uint64_t fired_ = 0;
};

// Entry DA: repeats its single static input token atr times on each output.
class ReplicateKernel : public Kernel {
 public:
  explicit ReplicateKernel(const KernelSetup& s) : setup_(s) { require_ports(s, 1, 1, 1, 64); }
  FireStatus fire(FiringContext& ctx) override {
    std::vector<std::uint8_t> src = ctx.inputs[0].empty() ? std::vector<std::uint8_t>(1, 0) : ctx.inputs[0][0];
    for (std::size_t o = 0; o < ctx.outputs.size(); ++o) {
      ctx.outputs[o].clear();
      for (std::uint32_t k = 0; k < ctx.output_rates[o]; ++k) {
        Token t = resize_cyclic(src, setup_.outputs[o].token_size);
        if (!t.empty()) t[0] = static_cast<std::uint8_t>(t[0] + k);
        ctx.outputs[o].push_back(std::move(t));
      }
    }
    return FireStatus::kOk;
  }

 private:
  KernelSetup setup_;
};

// Exit DA: folds however many tokens arrived into one token per output slot.
class MergeKernel : public Kernel {
 public:
  explicit MergeKernel(const KernelSetup& s) : setup_(s) { require_ports(s, 1, 64, 1, 64); }
  FireStatus fire(FiringContext& ctx) override {
    std::uint32_t count = 0;
    for (std::size_t o = 0; o < ctx.outputs.size(); ++o) {
      Token acc(setup_.outputs[o].token_size, 0);
      for (const auto& port : ctx.inputs)
        for (const auto& t : port) {
          ++count;
          for (std::size_t b = 0; b < acc.size() && !t.empty(); ++b) {
            acc[b] = static_cast<std::uint8_t>(acc[b] + t[b % t.size()]);
          }
        }
      if (!acc.empty()) acc[0] = static_cast<std::uint8_t>(acc[0] ^ count);
      ctx.outputs[o].assign(ctx.output_rates[o], acc);
    }
    return FireStatus::kOk;
  }

 private:
  KernelSetup setup_;
};

}  // namespace

void busywork(double ms) {
  if (ms <= 0) return;
  const std::uint64_t n = chunk_iterations();
  const auto deadline = Clock::now() + std::chrono::duration<double, std::milli>(ms);
  volatile double sink = 0;
  double x = 1.0;
  while (Clock::now() < deadline) {
    for (std::uint64_t i = 0; i < n; ++i) x = x * 1.0000001 + 1e-9;
    std::this_thread::yield();
  }
  sink = x;
  (void)sink;
}

Shape sequence_output_shape(const Json& layers, const Shape& input) {
  Shape shape = input;
  for (const auto& l : layers) {
    std::string op = l.at("op").get<std::string>();
    if (op == "conv2d") {
      if (!shape.is_hwc()) throw Error("shape mismatch: conv2d needs HxWxC, got " + shape.str());
      std::size_t k = l.value("kernel_size", std::size_t{5});
      if (k % 2 == 0) throw Error("conv2d kernel_size must be odd");
      shape.dims[2] = l.at("filters").get<std::size_t>();
    } else if (op == "maxpool2") {
      if (!shape.is_hwc() || shape.height() % 2 || shape.width() % 2) {
        throw Error("shape mismatch: maxpool2 needs even HxWxC, got " + shape.str());
      }
      shape.dims[0] /= 2;
      shape.dims[1] /= 2;
    } else if (op == "dense") {
      shape = Shape{{l.at("units").get<std::size_t>()}};
    } else if (op == "relu" || op == "softmax" || op == "busywork") {
      // shape preserved
    } else {
      throw Error("unknown layer op '" + op + "'");
    }
  }
  return shape;
}

Token synthetic_token(std::uint64_t seed, std::uint64_t frame, std::size_t index, std::size_t bytes) {
  std::uint64_t state = seed * 0x9e3779b97f4a7c15ULL + frame;
  Xoshiro256 rng(splitmix64(state) ^ (static_cast<std::uint64_t>(index) << 48));
  Token t(bytes);
  if (bytes % 4 == 0) {
    std::vector<float> v(bytes / 4);
    for (auto& f : v) f = rng.next_float();
    t = encode_floats(v);
  } else {
    for (auto& b : t) b = static_cast<std::uint8_t>(rng() >> 56);
  }
  return t;
}

Token resize_cyclic(const std::vector<std::uint8_t>& bytes, std::size_t size) {
  if (bytes.size() == size) return bytes;
  Token out(size, 0);
  if (bytes.empty()) return out;
  for (std::size_t i = 0; i < size; ++i) out[i] = bytes[i % bytes.size()];
  return out;
}

std::uint32_t decode_rate_token(const Token& token) {
  if (token.size() != 4) throw Error("control token must be 4 bytes");
  return static_cast<std::uint32_t>(token[0]) | (static_cast<std::uint32_t>(token[1]) << 8) |
         (static_cast<std::uint32_t>(token[2]) << 16) | (static_cast<std::uint32_t>(token[3]) << 24);
}

Token encode_rate_token(std::uint32_t rate) {
  return {static_cast<std::uint8_t>(rate), static_cast<std::uint8_t>(rate >> 8),
          static_cast<std::uint8_t>(rate >> 16), static_cast<std::uint8_t>(rate >> 24)};
}

void KernelRegistry::add(std::string name, KernelFactory factory) {
  factories_[std::move(name)] = std::move(factory);
}

std::unique_ptr<Kernel> KernelRegistry::create(const KernelSetup& setup) const {
  auto it = factories_.find(setup.kernel);
  if (it == factories_.end()) {
    throw Error("actor " + setup.actor_id + ": unknown kernel '" + setup.kernel + "'");
  }
  return it->second(setup);
}

std::vector<std::string> KernelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : factories_) out.push_back(name);
  return out;
}

KernelRegistry default_registry() {
  KernelRegistry r;
  r.add("source", [](const KernelSetup& s) { return std::make_unique<SourceKernel>(s); });
  r.add("sink", [](const KernelSetup& s) { return std::make_unique<SinkKernel>(s); });
  r.add("identity", [](const KernelSetup& s) { return std::make_unique<IdentityKernel>(s); });
  r.add("busywork", [](const KernelSetup& s) { return std::make_unique<BusyworkKernel>(s); });
  r.add("config", [](const KernelSetup& s) { return std::make_unique<ConfigKernel>(s); });
  r.add("replicate", [](const KernelSetup& s) { return std::make_unique<ReplicateKernel>(s); });
  r.add("merge", [](const KernelSetup& s) { return std::make_unique<MergeKernel>(s); });
  r.add("sequence", [](const KernelSetup& s) {
    Json layers = s.params.value("layers", Json::array());
    return std::make_unique<SequenceKernel>(s, layers);
  });
  // Single-layer keys share the sequence machinery; the actor's params are the layer's.
  for (const char* op : {"conv2d", "maxpool2", "relu", "dense", "softmax"}) {
    r.add(op, [op](const KernelSetup& s) {
      Json layer = s.params;
      layer.erase("input_shape");
      layer.erase("path");
      layer["op"] = op;
      return std::make_unique<SequenceKernel>(s, Json::array({layer}));
    });
  }
  return r;
}

}  // namespace edgeprune
