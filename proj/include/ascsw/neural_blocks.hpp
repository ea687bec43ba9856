#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ascsw::nn {

/// Dense C x H x W float tensor, row-major with channels outermost.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, float fill = 0.0f);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_); }
  std::size_t size() const noexcept { return values_.size(); }

  float& at(int c, int y, int x) { return values_[offset(c, y, x)]; }
  float at(int c, int y, int x) const { return values_[offset(c, y, x)]; }

  const float* row(int c, int y) const { return values_.data() + offset(c, y, 0); }
  float* row(int c, int y) { return values_.data() + offset(c, y, 0); }

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<float> channel(int c) noexcept { return std::span<float>(values_).subspan(c * plane(), plane()); }
  std::span<const float> channel(int c) const noexcept {
    return std::span<const float>(values_).subspan(c * plane(), plane());
  }

  bool same_shape(const FeatureMap& o) const noexcept {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }
  bool all_finite() const noexcept;

 private:
  std::size_t offset(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + static_cast<std::size_t>(y)) * width_ + static_cast<std::size_t>(x);
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> values_;
};

/// O x I x kh x kw convolution weights with per-output bias.
struct ConvWeights {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  std::vector<float> weights;  // (o, i, ky, kx) row-major
  std::vector<float> bias;     // size out_channels

  ConvWeights() = default;
  ConvWeights(int out, int in, int kh, int kw);

  float& w(int o, int i, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w + kx];
  }
  float w(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w + kx];
  }
  void check() const;
};

struct Dilation {
  int h = 1;
  int w = 1;
};

enum class StripOrientation { kHorizontal, kVertical };

/// 1 x k (horizontal) or k x 1 (vertical) kernel with taps spaced `dilation`
/// pixels apart along its axis.
struct StripKernel {
  StripOrientation orientation = StripOrientation::kHorizontal;
  int length = 3;
  int dilation = 1;
  int out_channels = 0;
  int in_channels = 0;
  std::vector<float> weights;  // (o, i, t)
  std::vector<float> bias;

  StripKernel() = default;
  StripKernel(StripOrientation orientation, int length, int dilation, int out, int in);

  /// Footprint along the strip axis: (length - 1) * dilation + 1.
  int extent() const noexcept { return (length - 1) * dilation + 1; }

  float& w(int o, int i, int t) { return weights[(static_cast<std::size_t>(o) * in_channels + i) * length + t]; }
  float w(int o, int i, int t) const { return weights[(static_cast<std::size_t>(o) * in_channels + i) * length + t]; }

  /// Same kernel as a dense 1 x k or k x 1 ConvWeights, plus the dilation to
  /// run it with.
  ConvWeights as_dense() const;
  Dilation dense_dilation() const noexcept;
  void check() const;
};

struct ASConvBranch {
  int dilation = 1;
  StripKernel vertical;    // in -> out
  StripKernel horizontal;  // out -> out
};

struct ASConvParams {
  std::vector<ASConvBranch> branches;
  ConvWeights fusion;  // 1x1, out -> out

  int in_channels() const;
  int out_channels() const;
  void check() const;
};

struct ASCSPPParams {
  ConvWeights pointwise;             // 1x1, C -> B
  std::vector<ASConvParams> atrous;  // each C -> B
  ConvWeights pool;                  // 1x1 on the pooled vector, C -> B
  ConvWeights projection;            // 1x1, (2 + atrous.size()) * B -> C

  int in_channels() const noexcept { return pointwise.in_channels; }
  int branch_channels() const noexcept { return pointwise.out_channels; }
  void check() const;
};

struct ChannelAttentionParams {
  ConvWeights conv;  // C x C x 1 x 1
};

/// "Same" zero padding: the pad before is floor(((k - 1) * d) / 2) on each
/// axis, stride 1. Throws ValidationError on a channel mismatch.
FeatureMap conv2d_dense(const FeatureMap& x, const ConvWeights& w, Dilation dilation = {});

FeatureMap strip_conv(const FeatureMap& x, const StripKernel& kernel);

/// Each branch runs its vertical then horizontal strip at the branch
/// dilation; branch outputs are summed and passed through the 1x1 fusion.
FeatureMap asconv_forward(const FeatureMap& x, const ASConvParams& p);

/// x * logistic(conv1x1(avgpool(x))), per channel.
FeatureMap channel_attention(const FeatureMap& x, const ChannelAttentionParams& p);
/// The gate vector alone.
std::vector<float> channel_attention_gates(const FeatureMap& x, const ChannelAttentionParams& p);

/// concat[pointwise, asconv..., pooled] -> 1x1 projection -> + x.
FeatureMap ascspp_forward(const FeatureMap& x, const ASCSPPParams& p);

std::vector<float> global_average_pool(const FeatureMap& x);

// Helpers for building parameter sets with deterministic pseudo-random
// weights (convcheck, tests, benchmarks).
ConvWeights random_conv(int out, int in, int kh, int kw, std::uint64_t seed, float scale = 1.0f);
StripKernel random_strip(StripOrientation o, int length, int dilation, int out, int in, std::uint64_t seed,
                         float scale = 1.0f);
ASConvParams random_asconv(int in, int out, std::span<const int> dilations, int length, std::uint64_t seed);
/// Defaults: rates {1, 6, 12, 18}, one ASConv branch per rate, strip length 3.
ASCSPPParams random_ascspp(int channels, int branch_channels, std::span<const int> rates, int length,
                           std::uint64_t seed);
FeatureMap random_feature_map(int c, int h, int w, std::uint64_t seed);

inline constexpr int kDefaultAscsppRates[] = {1, 6, 12, 18};
inline constexpr int kDefaultStripLength = 3;

namespace reference {

// Serial direct-loop convolution. The public conv2d_dense goes through
// im2col and an OpenMP loop over output channels.
FeatureMap conv2d_direct(const FeatureMap& x, const ConvWeights& w, Dilation dilation = {});

}  // namespace reference

}  // namespace ascsw::nn
