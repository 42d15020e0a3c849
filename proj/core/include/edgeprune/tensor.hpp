#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace edgeprune {

/// (height, width, channels) for feature maps, or a single length for vectors.
/// Elements are float32, row-major with channels fastest.
struct Shape {
  std::vector<std::size_t> dims;

  std::size_t elements() const;
  std::size_t bytes() const { return elements() * sizeof(float); }
  bool is_hwc() const { return dims.size() == 3; }
  std::size_t height() const { return dims.at(0); }
  std::size_t width() const { return dims.at(1); }
  std::size_t channels() const { return dims.at(2); }
  std::string str() const;

  bool operator==(const Shape&) const = default;
};

struct Tensor {
  Shape shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(shape.elements(), 0.0f) {}
  Tensor(Shape s, std::vector<float> values);

  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return data[(y * shape.width() + x) * shape.channels() + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * shape.width() + x) * shape.channels() + c];
  }
};

/// Little-endian float32 codec, independent of host byte order.
std::vector<float> decode_floats(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_floats(std::span<const float> values);

/// 2-D convolution weights, stored [filter][dy][dx][in_channel].
struct ConvWeights {
  std::size_t filters = 0;
  std::size_t kernel = 5;
  std::size_t in_channels = 0;
  std::vector<float> weights;
  std::vector<float> bias;
  /// Filter-innermost copy built by pack(); ops::conv2d uses it when present.
  std::vector<float> packed;

  void pack();
  static ConvWeights seeded(std::size_t filters, std::size_t kernel, std::size_t in_channels,
                            std::uint64_t seed);
  /// Raw little-endian floats: weights in storage order, then bias.
  static ConvWeights from_file(const std::string& path, std::size_t filters, std::size_t kernel,
                               std::size_t in_channels);
  float w(std::size_t f, std::size_t dy, std::size_t dx, std::size_t c) const {
    return weights[((f * kernel + dy) * kernel + dx) * in_channels + c];
  }
};

/// Dense weights, stored [output][input].
struct DenseWeights {
  std::size_t outputs = 0;
  std::size_t inputs = 0;
  std::vector<float> weights;
  std::vector<float> bias;
  /// Output-innermost copy built by pack().
  std::vector<float> packed;

  void pack();
  static DenseWeights seeded(std::size_t outputs, std::size_t inputs, std::uint64_t seed);
  static DenseWeights from_file(const std::string& path, std::size_t outputs, std::size_t inputs);
};

namespace ops {

/// Stride 1, same (zero) padding, odd kernel. Accumulates bias first, then
/// taps in (dy, dx, c) order, skipping out-of-bounds taps.
Tensor conv2d(const Tensor& input, const ConvWeights& w);
Tensor maxpool2(const Tensor& input);
Tensor relu(Tensor input);
/// Flattens the input; y = b + sum_i W[j][i] x[i], summed in ascending i.
Tensor dense(const Tensor& input, const DenseWeights& w);
Tensor softmax(const Tensor& input);

}  // namespace ops

}  // namespace edgeprune
