#include "ascsw/convcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "ascsw/error.hpp"

namespace ascsw::nn {

double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
  if (!a.same_shape(b)) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  auto va = a.values();
  auto vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(va[i]) - static_cast<double>(vb[i])));
  }
  return m;
}

namespace reference {

FeatureMap strip_via_dense(const FeatureMap& x, const StripKernel& k) {
  return conv2d_direct(x, k.as_dense(), k.dense_dilation());
}

FeatureMap asconv_via_dense(const FeatureMap& x, const ASConvParams& p) {
  FeatureMap sum;
  for (const auto& b : p.branches) {
    FeatureMap y = strip_via_dense(strip_via_dense(x, b.vertical), b.horizontal);
    if (sum.size() == 0) {
      sum = std::move(y);
    } else {
      for (std::size_t i = 0; i < sum.size(); ++i) sum.values()[i] += y.values()[i];
    }
  }
  return conv2d_direct(sum, p.fusion);
}

FeatureMap ascspp_via_dense(const FeatureMap& x, const ASCSPPParams& p) {
  const int B = p.branch_channels();
  const int n = static_cast<int>(2 + p.atrous.size());
  FeatureMap concat(B * n, x.height(), x.width());
  auto copy_channels = [&](const FeatureMap& part, int first) {
    for (int c = 0; c < part.channels(); ++c)
      for (int y = 0; y < x.height(); ++y)
        for (int xx = 0; xx < x.width(); ++xx) concat.at(first + c, y, xx) = part.at(c, y, xx);
  };
  copy_channels(conv2d_direct(x, p.pointwise), 0);
  for (std::size_t i = 0; i < p.atrous.size(); ++i) {
    copy_channels(asconv_via_dense(x, p.atrous[i]), static_cast<int>(i + 1) * B);
  }
  // Pool branch: pooled 1x1 map through the dense conv, then broadcast.
  FeatureMap pooled(x.channels(), 1, 1);
  for (int c = 0; c < x.channels(); ++c) {
    double s = 0.0;
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx) s += x.at(c, y, xx);
    pooled.at(c, 0, 0) = static_cast<float>(s / (static_cast<double>(x.height()) * x.width()));
  }
  const FeatureMap pool_out = conv2d_direct(pooled, p.pool);
  for (int c = 0; c < B; ++c)
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx) concat.at((n - 1) * B + c, y, xx) = pool_out.at(c, 0, 0);

  FeatureMap out = conv2d_direct(concat, p.projection);
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += x.values()[i];
  return out;
}

}  // namespace reference

double ConvCheckReport::max_dev() const { return std::max({strip_max_dev, asconv_max_dev, ascspp_max_dev}); }

bool ConvCheckReport::passed() const { return max_dev() <= tolerance && support_failures == 0; }

std::string ConvCheckReport::to_json() const {
  nlohmann::json j;
  j["cases"] = {{"strip", strip_cases}, {"asconv", asconv_cases}, {"ascspp", ascspp_cases}};
  j["max_abs_deviation"] = {{"strip", strip_max_dev}, {"asconv", asconv_max_dev}, {"ascspp", ascspp_max_dev}};
  j["max_deviation"] = max_dev();
  j["tolerance"] = tolerance;
  j["impulse_support"] = {{"checks", support_checks}, {"failures", support_failures}};
  j["passed"] = passed();
  return j.dump(2);
}

namespace {

// Nonzero support of the response to a centred impulse, along the strip
// axis and across it.
bool impulse_support_ok(StripOrientation o, int length, int dilation) {
  const int extent = (length - 1) * dilation + 1;
  const int size = extent + 4;
  FeatureMap impulse(1, size, size);
  impulse.at(0, size / 2, size / 2) = 1.0f;
  StripKernel k(o, length, dilation, 1, 1);
  std::fill(k.weights.begin(), k.weights.end(), 1.0f);
  const FeatureMap r = strip_conv(impulse, k);
  int min_y = size, max_y = -1, min_x = size, max_x = -1;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (r.at(0, y, x) != 0.0f) {
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
      }
    }
  }
  if (max_y < 0) return false;
  const int along = o == StripOrientation::kVertical ? max_y - min_y + 1 : max_x - min_x + 1;
  const int across = o == StripOrientation::kVertical ? max_x - min_x + 1 : max_y - min_y + 1;
  return along == extent && across == 1;
}

}  // namespace

ConvCheckReport run_convcheck(const ConvCheckOptions& options) {
  if (options.cases < 3) throw ValidationError("convcheck needs at least 3 cases");
  ConvCheckReport report;
  report.tolerance = options.tolerance;
  std::mt19937_64 rng(options.seed);
  auto uniform = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  const int n_strip = options.cases / 2;
  const int n_asconv = (options.cases * 3) / 10;
  const int n_ascspp = options.cases - n_strip - n_asconv;

  for (int i = 0; i < n_strip; ++i) {
    const auto o = uniform(0, 1) ? StripOrientation::kVertical : StripOrientation::kHorizontal;
    const int len = uniform(1, 7);
    const int d = uniform(1, 4);
    const int in = uniform(1, 4);
    const int out = uniform(1, 4);
    const FeatureMap x = random_feature_map(in, uniform(1, 17), uniform(1, 17), rng());
    const StripKernel k = random_strip(o, len, d, out, in, rng());
    report.strip_max_dev = std::max(report.strip_max_dev, max_abs_diff(strip_conv(x, k), reference::strip_via_dense(x, k)));
    ++report.strip_cases;

    ++report.support_checks;
    if (!impulse_support_ok(o, len, d)) ++report.support_failures;
  }

  for (int i = 0; i < n_asconv; ++i) {
    std::vector<int> rates(static_cast<std::size_t>(uniform(1, 3)));
    for (int& r : rates) r = uniform(1, 4);
    const int in = uniform(1, 3);
    const int out = uniform(1, 3);
    const FeatureMap x = random_feature_map(in, uniform(2, 16), uniform(2, 16), rng());
    const ASConvParams p = random_asconv(in, out, rates, uniform(1, 5), rng());
    report.asconv_max_dev =
        std::max(report.asconv_max_dev, max_abs_diff(asconv_forward(x, p), reference::asconv_via_dense(x, p)));
    ++report.asconv_cases;
  }

  for (int i = 0; i < n_ascspp; ++i) {
    const bool defaults = i % 2 == 0;
    std::vector<int> rates;
    if (defaults) {
      rates.assign(std::begin(kDefaultAscsppRates), std::end(kDefaultAscsppRates));
    } else {
      rates.resize(static_cast<std::size_t>(uniform(1, 3)));
      for (int& r : rates) r = uniform(1, 6);
    }
    const int c = uniform(1, 4);
    const int b = uniform(1, 3);
    const FeatureMap x = random_feature_map(c, uniform(1, 17), uniform(1, 17), rng());
    const ASCSPPParams p = random_ascspp(c, b, rates, defaults ? kDefaultStripLength : uniform(1, 5), rng() % 100000);
    report.ascspp_max_dev =
        std::max(report.ascspp_max_dev, max_abs_diff(ascspp_forward(x, p), reference::ascspp_via_dense(x, p)));
    ++report.ascspp_cases;
  }
  return report;
}

}  // namespace ascsw::nn
