#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ascsw/convcheck.hpp"
#include "ascsw/error.hpp"
#include "ascsw/neural_blocks.hpp"
#include "ascsw/weights_io.hpp"
#include "test_util.hpp"

using namespace ascsw;
using namespace ascsw::nn;

namespace {

FeatureMap impulse(int c, int h, int w, int y, int x) {
  FeatureMap m(c, h, w);
  for (int ch = 0; ch < c; ++ch) m.at(ch, y, x) = 1.0f;
  return m;
}

StripKernel ones_strip(StripOrientation o, int length, int dilation) {
  StripKernel k(o, length, dilation, 1, 1);
  for (float& v : k.weights) v = 1.0f;
  return k;
}

ConvWeights identity_1x1(int c, float gain = 1.0f) {
  ConvWeights w(c, c, 1, 1);
  for (int i = 0; i < c; ++i) w.w(i, i, 0, 0) = gain;
  return w;
}

std::vector<std::pair<int, int>> support(const FeatureMap& m, int c = 0) {
  std::vector<std::pair<int, int>> s;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(c, y, x) != 0.0f) s.push_back({y, x});
  return s;
}

FeatureMap combine(float a, const FeatureMap& x, float b, const FeatureMap& y) {
  FeatureMap out(x.channels(), x.height(), x.width());
  for (std::size_t i = 0; i < x.size(); ++i) out.values()[i] = a * x.values()[i] + b * y.values()[i];
  return out;
}

void zero_bias(ConvWeights& w) { std::fill(w.bias.begin(), w.bias.end(), 0.0f); }
void zero_bias(StripKernel& k) { std::fill(k.bias.begin(), k.bias.end(), 0.0f); }

}  // namespace

TEST(Conv2d, IdentityKernel) {
  const FeatureMap x = random_feature_map(3, 6, 7, 1);
  EXPECT_EQ(max_abs_diff(conv2d_dense(x, identity_1x1(3)), x), 0.0);
}

TEST(Conv2d, ZeroWeightsGiveBias) {
  const FeatureMap x = random_feature_map(2, 5, 5, 2);
  ConvWeights w(3, 2, 3, 3);
  w.bias = {0.5f, -1.0f, 2.0f};
  const FeatureMap y = conv2d_dense(x, w, {2, 2});
  for (int c = 0; c < 3; ++c)
    for (float v : y.channel(c)) EXPECT_EQ(v, w.bias[c]);
}

TEST(Conv2d, MatchesNaiveLoops) {
  // Batch of two 3x5x5 inputs against a 2x3x3x3 kernel, dilation 2.
  for (std::uint64_t sample = 0; sample < 2; ++sample) {
    const FeatureMap x = random_feature_map(3, 5, 5, 100 + sample);
    const ConvWeights w = random_conv(2, 3, 3, 3, 200 + sample);
    const FeatureMap y = conv2d_dense(x, w, {2, 2});
    const std::vector<float> in(x.values().begin(), x.values().end());
    const auto expected = oracle::conv_naive(in, 3, 5, 5, w.weights, w.bias, 2, 3, 3, 2, 2);
    ASSERT_EQ(y.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(y.values()[i], expected[i], 1e-5);
  }
}

TEST(Conv2d, ImcolMatchesDirectOverRandomShapes) {
  std::mt19937 rng(31);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (int trial = 0; trial < 40; ++trial) {
    const int c = pick(1, 4), o = pick(1, 4), h = pick(1, 12), w = pick(1, 12);
    const int kh = pick(1, 5), kw = pick(1, 5);
    const Dilation d{pick(1, 3), pick(1, 3)};
    const FeatureMap x = random_feature_map(c, h, w, 300 + trial);
    const ConvWeights wt = random_conv(o, c, kh, kw, 400 + trial);
    const FeatureMap fast = conv2d_dense(x, wt, d);
    const FeatureMap slow = nn::reference::conv2d_direct(x, wt, d);
    EXPECT_LE(max_abs_diff(fast, slow), 1e-5);
    const std::vector<float> in(x.values().begin(), x.values().end());
    const auto expected = oracle::conv_naive(in, c, h, w, wt.weights, wt.bias, o, kh, kw, d.h, d.w);
    for (std::size_t i = 0; i < expected.size(); ++i) ASSERT_NEAR(fast.values()[i], expected[i], 1e-5);
  }
}

TEST(Conv2d, ChannelMismatchThrows) {
  const FeatureMap x(3, 4, 4);
  EXPECT_THROW(conv2d_dense(x, ConvWeights(2, 2, 1, 1)), ValidationError);
}

TEST(StripConv, UnitStripIsIdentity) {
  const FeatureMap x = random_feature_map(1, 6, 6, 3);
  StripKernel k(StripOrientation::kVertical, 1, 1, 1, 1);
  k.w(0, 0, 0) = 1.0f;
  EXPECT_EQ(max_abs_diff(strip_conv(x, k), x), 0.0);
}

TEST(StripConv, DilatedHorizontalImpulse) {
  const FeatureMap y = strip_conv(impulse(1, 9, 9, 4, 4), ones_strip(StripOrientation::kHorizontal, 3, 2));
  const std::vector<std::pair<int, int>> expected{{4, 2}, {4, 4}, {4, 6}};
  EXPECT_EQ(support(y), expected);
  for (auto [r, c] : expected) EXPECT_EQ(y.at(0, r, c), 1.0f);
}

TEST(StripConv, CascadeIsOuterProduct) {
  const FeatureMap v = strip_conv(impulse(1, 7, 7, 3, 3), ones_strip(StripOrientation::kVertical, 3, 1));
  const FeatureMap y = strip_conv(v, ones_strip(StripOrientation::kHorizontal, 3, 1));
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c) EXPECT_EQ(y.at(0, r, c), (std::abs(r - 3) <= 1 && std::abs(c - 3) <= 1) ? 1.0f : 0.0f);
}

TEST(StripConv, SupportMatchesReceptiveField) {
  for (int length : {1, 2, 3, 5})
    for (int d : {1, 2, 3, 6})
      for (auto o : {StripOrientation::kHorizontal, StripOrientation::kVertical}) {
        const int n = 2 * (length - 1) * d + 3;
        const FeatureMap y = strip_conv(impulse(1, n, n, n / 2, n / 2), ones_strip(o, length, d));
        const auto s = support(y);
        ASSERT_EQ(static_cast<int>(s.size()), length);
        int lo = n, hi = -1;
        for (auto [r, c] : s) {
          const int along = o == StripOrientation::kHorizontal ? c : r;
          const int across = o == StripOrientation::kHorizontal ? r : c;
          EXPECT_EQ(across, n / 2);
          lo = std::min(lo, along);
          hi = std::max(hi, along);
        }
        EXPECT_EQ(hi - lo + 1, (length - 1) * d + 1);
      }
}

TEST(StripConv, MatchesEmbeddedDense) {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    const auto o = trial % 2 ? StripOrientation::kVertical : StripOrientation::kHorizontal;
    const int len = std::uniform_int_distribution<int>(1, 5)(rng);
    const int d = std::uniform_int_distribution<int>(1, 4)(rng);
    const int h = std::uniform_int_distribution<int>(1, 14)(rng);
    const int w = std::uniform_int_distribution<int>(1, 14)(rng);
    const StripKernel k = random_strip(o, len, d, 3, 2, 500 + trial);
    const FeatureMap x = random_feature_map(2, h, w, 600 + trial);
    EXPECT_LE(max_abs_diff(strip_conv(x, k), conv2d_dense(x, k.as_dense(), k.dense_dilation())), 1e-5);
  }
}

TEST(StripConv, TranslationEquivariantAwayFromBorders) {
  const StripKernel k = random_strip(StripOrientation::kHorizontal, 3, 2, 2, 1, 7);
  StripKernel nob = k;
  zero_bias(nob);
  const FeatureMap a = strip_conv(impulse(1, 21, 21, 8, 8), nob);
  const FeatureMap b = strip_conv(impulse(1, 21, 21, 11, 6), nob);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 21; ++y)
      for (int x = 0; x < 21; ++x) {
        const int sy = y + 3, sx = x - 2;
        if (sy < 0 || sy >= 21 || sx < 0 || sx >= 21) continue;
        EXPECT_EQ(a.at(c, y, x), b.at(c, sy, sx));
      }
}

TEST(ASConv, IdentityBranch) {
  ASConvParams p;
  ASConvBranch b;
  b.vertical = StripKernel(StripOrientation::kVertical, 1, 1, 2, 2);
  b.horizontal = StripKernel(StripOrientation::kHorizontal, 1, 1, 2, 2);
  for (int c = 0; c < 2; ++c) {
    b.vertical.w(c, c, 0) = 1.0f;
    b.horizontal.w(c, c, 0) = 1.0f;
  }
  p.branches.push_back(b);
  p.fusion = identity_1x1(2);
  const FeatureMap x = random_feature_map(2, 5, 6, 9);
  EXPECT_EQ(max_abs_diff(asconv_forward(x, p), x), 0.0);
}

TEST(ASConv, DuplicatedBranchesWithHalvedFusion) {
  const int rates[] = {2};
  ASConvParams single = random_asconv(3, 2, rates, 3, 11);
  ASConvParams twice = single;
  twice.branches.push_back(single.branches[0]);
  for (float& v : twice.fusion.weights) v *= 0.5f;
  const FeatureMap x = random_feature_map(3, 9, 8, 12);
  EXPECT_LE(max_abs_diff(asconv_forward(x, single), asconv_forward(x, twice)), 1e-5);
}

TEST(ASConv, MatchesDenseComposition) {
  const int rates[] = {1, 2, 3};
  const ASConvParams p = random_asconv(3, 4, rates, 3, 13);
  const FeatureMap x = random_feature_map(3, 11, 10, 14);
  EXPECT_LE(max_abs_diff(asconv_forward(x, p), nn::reference::asconv_via_dense(x, p)), 1e-5);
}

TEST(ChannelAttention, ZeroWeightsHalve) {
  const FeatureMap x = random_feature_map(4, 6, 5, 15);
  ChannelAttentionParams p{ConvWeights(4, 4, 1, 1)};
  const FeatureMap y = channel_attention(x, p);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.values()[i], x.values()[i] / 2, 1e-6);
}

TEST(ChannelAttention, ConstantChannelsPoolToConstants) {
  FeatureMap x(3, 4, 4);
  const float values[] = {1.5f, -2.0f, 0.25f};
  for (int c = 0; c < 3; ++c)
    for (float& v : x.channel(c)) v = values[c];
  const auto pooled = global_average_pool(x);
  for (int c = 0; c < 3; ++c) EXPECT_FLOAT_EQ(pooled[c], values[c]);
}

TEST(ChannelAttention, MatchesHandComputedGates) {
  const FeatureMap x = random_feature_map(3, 5, 7, 16);
  const ChannelAttentionParams p{random_conv(3, 3, 1, 1, 17)};
  std::vector<double> mean(3, 0.0);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 5; ++y)
      for (int xx = 0; xx < 7; ++xx) mean[c] += x.at(c, y, xx);
    mean[c] /= 35.0;
  }
  const FeatureMap out = channel_attention(x, p);
  const auto gates = channel_attention_gates(x, p);
  for (int o = 0; o < 3; ++o) {
    double z = p.conv.bias[o];
    for (int i = 0; i < 3; ++i) z += p.conv.w(o, i, 0, 0) * mean[i];
    const double s = 1.0 / (1.0 + std::exp(-z));
    EXPECT_NEAR(gates[o], s, 1e-6);
    EXPECT_GT(gates[o], 0.0f);
    EXPECT_LT(gates[o], 1.0f);
    for (int y = 0; y < 5; ++y)
      for (int xx = 0; xx < 7; ++xx) {
        EXPECT_NEAR(out.at(o, y, xx), x.at(o, y, xx) * s, 1e-5);
        EXPECT_LE(std::abs(out.at(o, y, xx)), std::abs(x.at(o, y, xx)));
      }
  }
}

TEST(ChannelAttention, ChannelMismatchThrows) {
  EXPECT_THROW(channel_attention(FeatureMap(3, 2, 2), ChannelAttentionParams{ConvWeights(2, 2, 1, 1)}),
               ValidationError);
}

TEST(ASCSPP, ZeroWeightsLeaveResidual) {
  ASCSPPParams p = random_ascspp(4, 2, kDefaultAscsppRates, kDefaultStripLength, 18);
  std::fill(p.projection.weights.begin(), p.projection.weights.end(), 0.0f);
  zero_bias(p.projection);
  const FeatureMap x = random_feature_map(4, 7, 9, 19);
  EXPECT_EQ(max_abs_diff(ascspp_forward(x, p), x), 0.0);
}

TEST(ASCSPP, MatchesDenseComposition) {
  const int rates[] = {1, 2};
  const ASCSPPParams p = random_ascspp(3, 2, rates, 3, 20);
  const FeatureMap x = random_feature_map(3, 8, 8, 21);
  EXPECT_LE(max_abs_diff(ascspp_forward(x, p), nn::reference::ascspp_via_dense(x, p)), 1e-5);
}

TEST(ASCSPP, PreservesSpatialDims) {
  const ASCSPPParams p = random_ascspp(2, 2, kDefaultAscsppRates, kDefaultStripLength, 22);
  for (int h = 1; h <= 17; h += 2)
    for (int w = 1; w <= 17; w += 4) {
      const FeatureMap x = random_feature_map(2, h, w, 23);
      const FeatureMap y = ascspp_forward(x, p);
      EXPECT_TRUE(y.same_shape(x));
      EXPECT_TRUE(y.all_finite());
    }
}

TEST(Linearity, AllConvolutionOps) {
  const FeatureMap a = random_feature_map(3, 9, 9, 24);
  const FeatureMap b = random_feature_map(3, 9, 9, 25);
  const float alpha = 0.7f, beta = -1.3f;
  const FeatureMap mix = combine(alpha, a, beta, b);

  ConvWeights dense = random_conv(2, 3, 3, 3, 26);
  zero_bias(dense);
  auto f_dense = [&](const FeatureMap& x) { return conv2d_dense(x, dense, {2, 1}); };

  StripKernel strip = random_strip(StripOrientation::kVertical, 3, 2, 2, 3, 27);
  zero_bias(strip);
  auto f_strip = [&](const FeatureMap& x) { return strip_conv(x, strip); };

  const int rates[] = {1, 3};
  ASConvParams as = random_asconv(3, 2, rates, 3, 28);
  for (auto& br : as.branches) {
    zero_bias(br.vertical);
    zero_bias(br.horizontal);
  }
  zero_bias(as.fusion);
  auto f_as = [&](const FeatureMap& x) { return asconv_forward(x, as); };

  auto check = [&](auto f) {
    const FeatureMap lhs = f(mix);
    const FeatureMap rhs = combine(alpha, f(a), beta, f(b));
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-5);
  };
  check(f_dense);
  check(f_strip);
  check(f_as);
}

TEST(ConvCheck, SmallRunPasses) {
  ConvCheckOptions opt;
  opt.cases = 20;
  const ConvCheckReport r = run_convcheck(opt);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.strip_cases + r.asconv_cases + r.ascspp_cases, 20);
  EXPECT_EQ(r.support_failures, 0);
}

TEST(WeightsIo, RoundTripEveryBlockType) {
  const auto dir = testutil::scratch_dir("weights");
  const int rates[] = {1, 6};
  const std::vector<BlockParams> blocks{random_asconv(3, 2, rates, 3, 30), random_ascspp(3, 2, rates, 3, 31),
                                        ChannelAttentionParams{random_conv(3, 3, 1, 1, 32)}};
  const FeatureMap x = random_feature_map(3, 8, 8, 33);
  auto run = [&](const BlockParams& b) {
    return std::visit(
        [&](const auto& p) -> FeatureMap {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, ASConvParams>) return asconv_forward(x, p);
          else if constexpr (std::is_same_v<T, ASCSPPParams>) return ascspp_forward(x, p);
          else return channel_attention(x, p);
        },
        b);
  };
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto path = dir / ("block" + std::to_string(i) + ".json");
    save_weights(path, blocks[i]);
    const BlockParams back = load_weights(path);
    EXPECT_EQ(block_type_name(back), block_type_name(blocks[i]));
    EXPECT_EQ(max_abs_diff(run(back), run(blocks[i])), 0.0);
  }
}

TEST(WeightsIo, TruncatedBlobRejected) {
  const auto dir = testutil::scratch_dir("weights_bad");
  const auto path = dir / "attn.json";
  save_weights(path, ChannelAttentionParams{random_conv(4, 4, 1, 1, 34)});
  std::filesystem::resize_file(dir / "attn.bin", 8);
  EXPECT_THROW(load_weights(path), ValidationError);
  EXPECT_THROW(load_weights(dir / "missing.json"), IoError);
}
