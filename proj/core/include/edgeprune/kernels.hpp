#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgeprune/fifo.hpp"
#include "edgeprune/graph.hpp"
#include "edgeprune/tensor.hpp"

namespace edgeprune {

struct PortInfo {
  std::string id;
  std::size_t token_size = 0;
  std::uint32_t lrl = 1;
  std::uint32_t url = 1;
  bool dynamic = false;
};

/// Everything a kernel factory may look at. Feedback and control ports are
/// serviced by the runtime and never appear here.
struct KernelSetup {
  std::string actor_id;
  std::string kernel;
  Json params = Json::object();
  std::vector<PortInfo> inputs;
  std::vector<PortInfo> outputs;
  std::filesystem::path base_dir;
  std::optional<std::uint64_t> frames;  // run-wide override for sources
};

enum class FireStatus { kOk, kEndOfStream };

/// One firing. `inputs[i]` holds exactly input_rates[i] tokens; the kernel
/// must leave exactly output_rates[i] tokens of the port's size in outputs[i].
struct FiringContext {
  std::uint64_t frame_index = 0;
  std::vector<std::vector<Token>> inputs;
  std::vector<std::vector<Token>> outputs;
  std::vector<std::uint32_t> input_rates;
  std::vector<std::uint32_t> output_rates;
};

class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual void init() {}
  virtual FireStatus fire(FiringContext& ctx) = 0;
  virtual void deinit() {}
};

using KernelFactory = std::function<std::unique_ptr<Kernel>(const KernelSetup&)>;

/// Immutable after startup; shared by every actor of a program.
class KernelRegistry {
 public:
  void add(std::string name, KernelFactory factory);
  bool contains(const std::string& name) const { return factories_.contains(name); }
  std::unique_ptr<Kernel> create(const KernelSetup& setup) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, KernelFactory> factories_;
};

/// conv2d, maxpool2, relu, dense, softmax, sequence, busywork, source, sink,
/// identity, config, replicate, merge.
KernelRegistry default_registry();

/// Spins on floating-point work until `ms` of wall-clock time has passed.
/// The inner chunk is sized at first use to roughly 20 us.
void busywork(double ms);

/// Output shape of a `sequence` layer list applied to `input`.
Shape sequence_output_shape(const Json& layers, const Shape& input);

/// Deterministic synthetic frame: float32 values in [0, 1) when the size is a
/// multiple of 4, raw bytes otherwise.
Token synthetic_token(std::uint64_t seed, std::uint64_t frame, std::size_t index, std::size_t bytes);

/// Cyclic resize used by busywork when input and output sizes differ.
Token resize_cyclic(const std::vector<std::uint8_t>& bytes, std::size_t size);

std::uint32_t decode_rate_token(const Token& token);
Token encode_rate_token(std::uint32_t rate);

}  // namespace edgeprune
