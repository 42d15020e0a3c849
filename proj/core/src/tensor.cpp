#include "edgeprune/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "edgeprune/error.hpp"
#include "edgeprune/rng.hpp"

namespace edgeprune {

namespace {

std::vector<float> uniform_values(std::size_t n, float scale, Xoshiro256& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = (rng.next_float() * 2.0f - 1.0f) * scale;
  return v;
}

std::vector<float> read_floats(const std::string& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open weights file " + path);
  std::vector<std::uint8_t> bytes(count * sizeof(float));
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw Error("weights file " + path + " is too short: need " + std::to_string(bytes.size()) +
                " bytes");
  }
  return decode_floats(bytes);
}

}  // namespace

std::size_t Shape::elements() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

std::string Shape::str() const {
  std::ostringstream ss;
  for (std::size_t i = 0; i < dims.size(); ++i) ss << (i ? "x" : "") << dims[i];
  return ss.str();
}

Tensor::Tensor(Shape s, std::vector<float> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape.elements()) {
    throw Error("shape mismatch: " + shape.str() + " needs " + std::to_string(shape.elements()) +
                " elements, got " + std::to_string(data.size()));
  }
}

std::vector<float> decode_floats(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % sizeof(float) != 0) {
    throw Error("tensor byte length " + std::to_string(bytes.size()) + " is not a multiple of 4");
  }
  std::vector<float> out(bytes.size() / sizeof(float));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), bytes.data(), bytes.size());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::uint32_t u = 0;
      for (int b = 3; b >= 0; --b) u = (u << 8) | bytes[i * 4 + b];
      out[i] = std::bit_cast<float>(u);
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_floats(std::span<const float> values) {
  std::vector<std::uint8_t> out(values.size() * sizeof(float));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), values.data(), out.size());
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto u = std::bit_cast<std::uint32_t>(values[i]);
      for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<std::uint8_t>(u >> (8 * b));
    }
  }
  return out;
}

ConvWeights ConvWeights::seeded(std::size_t filters, std::size_t kernel, std::size_t in_channels,
                                std::uint64_t seed) {
  ConvWeights w{filters, kernel, in_channels, {}, {}, {}};
  Xoshiro256 rng(seed);
  float scale = 1.0f / std::sqrt(static_cast<float>(kernel * kernel * in_channels));
  w.weights = uniform_values(filters * kernel * kernel * in_channels, scale, rng);
  w.bias = uniform_values(filters, 0.1f * scale, rng);
  return w;
}

ConvWeights ConvWeights::from_file(const std::string& path, std::size_t filters, std::size_t kernel,
                                   std::size_t in_channels) {
  std::size_t nw = filters * kernel * kernel * in_channels;
  auto all = read_floats(path, nw + filters);
  ConvWeights w{filters, kernel, in_channels, {}, {}, {}};
  w.weights.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(nw));
  w.bias.assign(all.begin() + static_cast<std::ptrdiff_t>(nw), all.end());
  return w;
}

void ConvWeights::pack() {
  const std::size_t K = kernel, C = in_channels, F = filters;
  packed.assign(K * K * C * F, 0.0f);
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t dy = 0; dy < K; ++dy)
      for (std::size_t dx = 0; dx < K; ++dx)
        for (std::size_t c = 0; c < C; ++c) packed[((dy * K + dx) * C + c) * F + f] = w(f, dy, dx, c);
}

void DenseWeights::pack() {
  packed.assign(inputs * outputs, 0.0f);
  for (std::size_t j = 0; j < outputs; ++j)
    for (std::size_t i = 0; i < inputs; ++i) packed[i * outputs + j] = weights[j * inputs + i];
}

DenseWeights DenseWeights::seeded(std::size_t outputs, std::size_t inputs, std::uint64_t seed) {
  DenseWeights w{outputs, inputs, {}, {}, {}};
  Xoshiro256 rng(seed);
  float scale = 1.0f / std::sqrt(static_cast<float>(inputs));
  w.weights = uniform_values(outputs * inputs, scale, rng);
  w.bias = uniform_values(outputs, 0.1f * scale, rng);
  return w;
}

DenseWeights DenseWeights::from_file(const std::string& path, std::size_t outputs,
                                     std::size_t inputs) {
  auto all = read_floats(path, outputs * inputs + outputs);
  DenseWeights w{outputs, inputs, {}, {}, {}};
  w.weights.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(outputs * inputs));
  w.bias.assign(all.begin() + static_cast<std::ptrdiff_t>(outputs * inputs), all.end());
  return w;
}

namespace ops {

Tensor conv2d(const Tensor& input, const ConvWeights& w) {
  if (!input.shape.is_hwc() || input.shape.channels() != w.in_channels) {
    throw Error("shape mismatch: conv2d expects HxWx" + std::to_string(w.in_channels) + ", got " +
                input.shape.str());
  }
  if (w.kernel % 2 == 0) throw Error("conv2d kernel size must be odd");
  const std::size_t H = input.shape.height();
  const std::size_t W = input.shape.width();
  const std::size_t C = w.in_channels;
  const std::size_t F = w.filters;
  const std::size_t K = w.kernel;
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(K / 2);

  // Per-filter accumulators advance together; each still sums taps in
  // (dy, dx, c) order.
  ConvWeights local;
  if (w.packed.empty()) {
    local = w;
    local.pack();
  }
  const std::vector<float>& wt = w.packed.empty() ? local.packed : w.packed;

  Tensor out(Shape{{H, W, F}});
  std::vector<float> acc(F);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      std::copy(w.bias.begin(), w.bias.end(), acc.begin());
      for (std::size_t dy = 0; dy < K; ++dy) {
        std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + dy) - pad;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
        for (std::size_t dx = 0; dx < K; ++dx) {
          std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + dx) - pad;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
          const float* in = &input.data[(static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * C];
          const float* wrow = &wt[(dy * K + dx) * C * F];
          for (std::size_t c = 0; c < C; ++c) {
            const float v = in[c];
            const float* wc = wrow + c * F;
            for (std::size_t f = 0; f < F; ++f) acc[f] += v * wc[f];
          }
        }
      }
      std::copy(acc.begin(), acc.end(), &out.data[(y * W + x) * F]);
    }
  }
  return out;
}

Tensor maxpool2(const Tensor& input) {
  if (!input.shape.is_hwc()) throw Error("shape mismatch: maxpool2 expects HxWxC, got " + input.shape.str());
  const std::size_t H = input.shape.height();
  const std::size_t W = input.shape.width();
  const std::size_t C = input.shape.channels();
  if (H % 2 != 0 || W % 2 != 0) {
    throw Error("maxpool2 needs even height and width, got " + input.shape.str());
  }
  Tensor out(Shape{{H / 2, W / 2, C}});
  for (std::size_t y = 0; y < H / 2; ++y)
    for (std::size_t x = 0; x < W / 2; ++x)
      for (std::size_t c = 0; c < C; ++c) {
        float m = input.at(2 * y, 2 * x, c);
        m = std::max(m, input.at(2 * y, 2 * x + 1, c));
        m = std::max(m, input.at(2 * y + 1, 2 * x, c));
        m = std::max(m, input.at(2 * y + 1, 2 * x + 1, c));
        out.at(y, x, c) = m;
      }
  return out;
}

Tensor relu(Tensor input) {
  for (auto& v : input.data) v = v > 0.0f ? v : 0.0f;
  return input;
}

Tensor dense(const Tensor& input, const DenseWeights& w) {
  if (input.data.size() != w.inputs) {
    throw Error("shape mismatch: dense expects " + std::to_string(w.inputs) + " inputs, got " +
                std::to_string(input.data.size()));
  }
  std::vector<float> acc(w.bias);
  // Output-innermost traversal keeps the per-output summation order ascending in i.
  DenseWeights local;
  if (w.packed.empty()) {
    local = w;
    local.pack();
  }
  const std::vector<float>& wt = w.packed.empty() ? local.packed : w.packed;
  for (std::size_t i = 0; i < w.inputs; ++i) {
    const float v = input.data[i];
    const float* row = &wt[i * w.outputs];
    for (std::size_t j = 0; j < w.outputs; ++j) acc[j] += v * row[j];
  }
  return Tensor(Shape{{w.outputs}}, std::move(acc));
}

Tensor softmax(const Tensor& input) {
  Tensor out = input;
  if (out.data.empty()) return out;
  float m = *std::max_element(out.data.begin(), out.data.end());
  float sum = 0.0f;
  for (auto& v : out.data) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : out.data) v /= sum;
  return out;
}

}  // namespace ops

}  // namespace edgeprune
