#include "ascsw/neural_blocks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ascsw/error.hpp"

namespace ascsw::nn {

FeatureMap::FeatureMap(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 1 || height < 1 || width < 1) throw ValidationError("feature map dimensions must be >= 1");
  values_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

bool FeatureMap::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

ConvWeights::ConvWeights(int out, int in, int kh, int kw)
    : out_channels(out), in_channels(in), kernel_h(kh), kernel_w(kw) {
  check();
  weights.assign(static_cast<std::size_t>(out) * in * kh * kw, 0.0f);
  bias.assign(static_cast<std::size_t>(out), 0.0f);
}

void ConvWeights::check() const {
  if (out_channels < 1 || in_channels < 1 || kernel_h < 1 || kernel_w < 1) {
    throw ValidationError("convolution shape must be positive");
  }
  if (!weights.empty() &&
      weights.size() != static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w) {
    throw ValidationError("convolution weight count does not match its shape");
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(out_channels)) {
    throw ValidationError("bias length != out_channels");
  }
}

StripKernel::StripKernel(StripOrientation o, int len, int d, int out, int in)
    : orientation(o), length(len), dilation(d), out_channels(out), in_channels(in) {
  check();
  weights.assign(static_cast<std::size_t>(out) * in * len, 0.0f);
  bias.assign(static_cast<std::size_t>(out), 0.0f);
}

void StripKernel::check() const {
  if (length < 1 || dilation < 1 || out_channels < 1 || in_channels < 1) {
    throw ValidationError("strip kernel shape must be positive");
  }
  if (!weights.empty() && weights.size() != static_cast<std::size_t>(out_channels) * in_channels * length) {
    throw ValidationError("strip weight count does not match its shape");
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(out_channels)) {
    throw ValidationError("bias length != out_channels");
  }
}

ConvWeights StripKernel::as_dense() const {
  const bool vertical = orientation == StripOrientation::kVertical;
  ConvWeights dense(out_channels, in_channels, vertical ? length : 1, vertical ? 1 : length);
  dense.weights = weights;  // (o, i, t) has the same layout as (o, i, t, 0) / (o, i, 0, t)
  dense.bias = bias;
  return dense;
}

Dilation StripKernel::dense_dilation() const noexcept {
  return orientation == StripOrientation::kVertical ? Dilation{dilation, 1} : Dilation{1, dilation};
}

namespace {

inline int same_pad(int k, int d) { return ((k - 1) * d) / 2; }

inline float bias_or_zero(const std::vector<float>& bias, int o) {
  return bias.empty() ? 0.0f : bias[static_cast<std::size_t>(o)];
}

void check_input(const FeatureMap& x, int in_channels, const char* what) {
  if (x.channels() != in_channels) {
    throw ValidationError(std::string(what) + ": input has " + std::to_string(x.channels()) +
                          " channels, weights expect " + std::to_string(in_channels));
  }
}

void add_into(FeatureMap& acc, const FeatureMap& term) {
  auto a = acc.values();
  auto t = term.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += t[i];
}

inline float logistic(float v) { return 1.0f / (1.0f + std::exp(-v)); }

}  // namespace

FeatureMap conv2d_dense(const FeatureMap& x, const ConvWeights& w, Dilation dilation) {
  w.check();
  check_input(x, w.in_channels, "conv2d_dense");
  if (dilation.h < 1 || dilation.w < 1) throw ValidationError("dilation must be >= 1");

  const int H = x.height();
  const int W = x.width();
  const std::size_t P = x.plane();
  const int kh = w.kernel_h;
  const int kw = w.kernel_w;
  const int ph = same_pad(kh, dilation.h);
  const int pw = same_pad(kw, dilation.w);
  const std::size_t rows = static_cast<std::size_t>(w.in_channels) * kh * kw;

  // im2col: rows = (i, ky, kx), columns = output pixels. A 1x1 kernel reads
  // the input directly.
  std::vector<float> cols;
  const float* colp = x.values().data();
  if (kh != 1 || kw != 1) {
    cols.assign(rows * P, 0.0f);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
      const int i = static_cast<int>(r / (kh * kw));
      const int ky = static_cast<int>((r / kw) % kh);
      const int kx = static_cast<int>(r % kw);
      const int dy = ky * dilation.h - ph;
      const int dx = kx * dilation.w - pw;
      float* dst = cols.data() + static_cast<std::size_t>(r) * P;
      for (int y = 0; y < H; ++y) {
        const int sy = y + dy;
        if (sy < 0 || sy >= H) continue;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(W, W - dx);
        for (int xx = x0; xx < x1; ++xx) dst[static_cast<std::size_t>(y) * W + xx] = x.at(i, sy, xx + dx);
      }
    }
    colp = cols.data();
  }

  FeatureMap out(w.out_channels, H, W);
  float* outp = out.values().data();
#pragma omp parallel for schedule(static)
  for (int o = 0; o < w.out_channels; ++o) {
    float* acc = outp + static_cast<std::size_t>(o) * P;
    std::fill(acc, acc + P, bias_or_zero(w.bias, o));
    const float* wrow = w.weights.data() + static_cast<std::size_t>(o) * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const float wv = wrow[r];
      if (wv == 0.0f) continue;
      const float* src = colp + r * P;
      for (std::size_t p = 0; p < P; ++p) acc[p] += wv * src[p];
    }
  }
  return out;
}

FeatureMap strip_conv(const FeatureMap& x, const StripKernel& k) {
  k.check();
  check_input(x, k.in_channels, "strip_conv");
  const int H = x.height();
  const int W = x.width();
  const bool vertical = k.orientation == StripOrientation::kVertical;
  const int pad = same_pad(k.length, k.dilation);

  FeatureMap out(k.out_channels, H, W);
#pragma omp parallel for collapse(2) schedule(static)
  for (int o = 0; o < k.out_channels; ++o) {
    for (int y = 0; y < H; ++y) {
      float* row = out.row(o, y);
      std::fill(row, row + W, bias_or_zero(k.bias, o));
      for (int i = 0; i < k.in_channels; ++i) {
        for (int t = 0; t < k.length; ++t) {
          const float wv = k.w(o, i, t);
          const int shift = t * k.dilation - pad;
          if (vertical) {
            const int sy = y + shift;
            if (sy < 0 || sy >= H) continue;
            const float* src = x.row(i, sy);
            for (int xx = 0; xx < W; ++xx) row[xx] += wv * src[xx];
          } else {
            const float* src = x.row(i, y);
            const int x0 = std::max(0, -shift);
            const int x1 = std::min(W, W - shift);
            for (int xx = x0; xx < x1; ++xx) row[xx] += wv * src[xx + shift];
          }
        }
      }
    }
  }
  return out;
}

int ASConvParams::in_channels() const { return branches.empty() ? 0 : branches.front().vertical.in_channels; }
int ASConvParams::out_channels() const { return fusion.out_channels; }

void ASConvParams::check() const {
  if (branches.empty()) throw ValidationError("ASConv needs at least one branch");
  const int in = branches.front().vertical.in_channels;
  const int mid = branches.front().vertical.out_channels;
  for (const auto& b : branches) {
    b.vertical.check();
    b.horizontal.check();
    if (b.vertical.orientation != StripOrientation::kVertical ||
        b.horizontal.orientation != StripOrientation::kHorizontal) {
      throw ValidationError("ASConv branch strips must be vertical then horizontal");
    }
    if (b.vertical.dilation != b.dilation || b.horizontal.dilation != b.dilation) {
      throw ValidationError("ASConv strip dilation differs from its branch rate");
    }
    if (b.vertical.in_channels != in || b.vertical.out_channels != mid || b.horizontal.in_channels != mid ||
        b.horizontal.out_channels != mid) {
      throw ValidationError("ASConv branches disagree on channel counts");
    }
  }
  fusion.check();
  if (fusion.kernel_h != 1 || fusion.kernel_w != 1 || fusion.in_channels != mid) {
    throw ValidationError("ASConv fusion must be a 1x1 projection from the branch channels");
  }
}

FeatureMap asconv_forward(const FeatureMap& x, const ASConvParams& p) {
  p.check();
  check_input(x, p.in_channels(), "asconv_forward");
  FeatureMap sum;
  for (const auto& b : p.branches) {
    FeatureMap y = strip_conv(strip_conv(x, b.vertical), b.horizontal);
    if (sum.size() == 0) {
      sum = std::move(y);
    } else {
      add_into(sum, y);
    }
  }
  return conv2d_dense(sum, p.fusion);
}

std::vector<float> global_average_pool(const FeatureMap& x) {
  std::vector<float> pooled(static_cast<std::size_t>(x.channels()));
  for (int c = 0; c < x.channels(); ++c) {
    double s = 0.0;
    for (float v : x.channel(c)) s += v;
    pooled[static_cast<std::size_t>(c)] = static_cast<float>(s / static_cast<double>(x.plane()));
  }
  return pooled;
}

namespace {

// 1x1 convolution applied to a single vector.
std::vector<float> pointwise_vector(const ConvWeights& w, const std::vector<float>& v) {
  std::vector<float> out(static_cast<std::size_t>(w.out_channels));
  for (int o = 0; o < w.out_channels; ++o) {
    float acc = bias_or_zero(w.bias, o);
    for (int i = 0; i < w.in_channels; ++i) acc += w.w(o, i, 0, 0) * v[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(o)] = acc;
  }
  return out;
}

void check_pointwise(const ConvWeights& w, int in, int out, const char* what) {
  w.check();
  if (w.kernel_h != 1 || w.kernel_w != 1 || w.in_channels != in || w.out_channels != out) {
    throw ValidationError(std::string(what) + ": expected a " + std::to_string(out) + "x" + std::to_string(in) +
                          "x1x1 convolution");
  }
}

}  // namespace

std::vector<float> channel_attention_gates(const FeatureMap& x, const ChannelAttentionParams& p) {
  check_pointwise(p.conv, x.channels(), x.channels(), "channel_attention");
  std::vector<float> gates = pointwise_vector(p.conv, global_average_pool(x));
  for (float& g : gates) g = logistic(g);
  return gates;
}

FeatureMap channel_attention(const FeatureMap& x, const ChannelAttentionParams& p) {
  const std::vector<float> gates = channel_attention_gates(x, p);
  FeatureMap out = x;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < out.channels(); ++c) {
    const float g = gates[static_cast<std::size_t>(c)];
    for (float& v : out.channel(c)) v *= g;
  }
  return out;
}

void ASCSPPParams::check() const {
  const int c = pointwise.in_channels;
  const int b = pointwise.out_channels;
  check_pointwise(pointwise, c, b, "ASCSPP pointwise branch");
  for (const auto& a : atrous) {
    a.check();
    if (a.in_channels() != c || a.out_channels() != b) {
      throw ValidationError("ASCSPP atrous branch must map input channels to branch channels");
    }
  }
  check_pointwise(pool, c, b, "ASCSPP pool branch");
  check_pointwise(projection, b * static_cast<int>(2 + atrous.size()), c, "ASCSPP projection");
}

FeatureMap ascspp_forward(const FeatureMap& x, const ASCSPPParams& p) {
  p.check();
  check_input(x, p.in_channels(), "ascspp_forward");
  const int B = p.branch_channels();
  const int nbranches = static_cast<int>(2 + p.atrous.size());
  const std::size_t P = x.plane();

  FeatureMap concat(B * nbranches, x.height(), x.width());
  auto place = [&](const FeatureMap& part, int slot) {
    auto dst = concat.values().subspan(static_cast<std::size_t>(slot) * B * P, static_cast<std::size_t>(B) * P);
    std::copy(part.values().begin(), part.values().end(), dst.begin());
  };
  place(conv2d_dense(x, p.pointwise), 0);
  for (std::size_t i = 0; i < p.atrous.size(); ++i) place(asconv_forward(x, p.atrous[i]), static_cast<int>(i + 1));

  const std::vector<float> pooled = pointwise_vector(p.pool, global_average_pool(x));
  for (int c = 0; c < B; ++c) {
    auto dst = concat.channel((nbranches - 1) * B + c);
    std::fill(dst.begin(), dst.end(), pooled[static_cast<std::size_t>(c)]);
  }

  FeatureMap out = conv2d_dense(concat, p.projection);
  add_into(out, x);
  return out;
}

namespace {

void fill_uniform(std::vector<float>& v, std::mt19937_64& rng, float scale) {
  std::uniform_real_distribution<float> dist(-scale, scale);
  for (float& f : v) f = dist(rng);
}

}  // namespace

ConvWeights random_conv(int out, int in, int kh, int kw, std::uint64_t seed, float scale) {
  ConvWeights w(out, in, kh, kw);
  std::mt19937_64 rng(seed);
  fill_uniform(w.weights, rng, scale);
  fill_uniform(w.bias, rng, scale);
  return w;
}

StripKernel random_strip(StripOrientation o, int length, int dilation, int out, int in, std::uint64_t seed,
                         float scale) {
  StripKernel k(o, length, dilation, out, in);
  std::mt19937_64 rng(seed);
  fill_uniform(k.weights, rng, scale);
  fill_uniform(k.bias, rng, scale);
  return k;
}

ASConvParams random_asconv(int in, int out, std::span<const int> dilations, int length, std::uint64_t seed) {
  ASConvParams p;
  std::uint64_t s = seed;
  for (int d : dilations) {
    ASConvBranch b;
    b.dilation = d;
    b.vertical = random_strip(StripOrientation::kVertical, length, d, out, in, ++s, 0.5f);
    b.horizontal = random_strip(StripOrientation::kHorizontal, length, d, out, out, ++s, 0.5f);
    p.branches.push_back(std::move(b));
  }
  p.fusion = random_conv(out, out, 1, 1, ++s, 0.5f);
  return p;
}

ASCSPPParams random_ascspp(int channels, int branch_channels, std::span<const int> rates, int length,
                           std::uint64_t seed) {
  ASCSPPParams p;
  std::uint64_t s = seed * 1000;
  p.pointwise = random_conv(branch_channels, channels, 1, 1, ++s, 0.5f);
  for (int r : rates) {
    const int one[] = {r};
    p.atrous.push_back(random_asconv(channels, branch_channels, one, length, ++s * 31));
  }
  p.pool = random_conv(branch_channels, channels, 1, 1, ++s, 0.5f);
  p.projection = random_conv(channels, branch_channels * static_cast<int>(2 + rates.size()), 1, 1, ++s, 0.5f);
  return p;
}

FeatureMap random_feature_map(int c, int h, int w, std::uint64_t seed) {
  FeatureMap x(c, h, w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (float& v : x.values()) v = dist(rng);
  return x;
}

namespace reference {

FeatureMap conv2d_direct(const FeatureMap& x, const ConvWeights& w, Dilation dilation) {
  w.check();
  check_input(x, w.in_channels, "conv2d_direct");
  const int H = x.height();
  const int W = x.width();
  const int ph = same_pad(w.kernel_h, dilation.h);
  const int pw = same_pad(w.kernel_w, dilation.w);
  FeatureMap out(w.out_channels, H, W);
  for (int o = 0; o < w.out_channels; ++o) {
    for (int y = 0; y < H; ++y) {
      for (int xx = 0; xx < W; ++xx) {
        float acc = bias_or_zero(w.bias, o);
        for (int i = 0; i < w.in_channels; ++i) {
          for (int ky = 0; ky < w.kernel_h; ++ky) {
            const int sy = y + ky * dilation.h - ph;
            if (sy < 0 || sy >= H) continue;
            for (int kx = 0; kx < w.kernel_w; ++kx) {
              const int sx = xx + kx * dilation.w - pw;
              if (sx < 0 || sx >= W) continue;
              acc += w.w(o, i, ky, kx) * x.at(i, sy, sx);
            }
          }
        }
        out.at(o, y, xx) = acc;
      }
    }
  }
  return out;
}

}  // namespace reference

}  // namespace ascsw::nn
