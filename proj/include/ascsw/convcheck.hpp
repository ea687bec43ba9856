#pragma once

#include <cstdint>
#include <string>

#include "ascsw/neural_blocks.hpp"

namespace ascsw::nn {

struct ConvCheckOptions {
  int cases = 200;
  std::uint64_t seed = 20240917;
  double tolerance = 1e-5;
};

struct ConvCheckReport {
  int strip_cases = 0;
  int asconv_cases = 0;
  int ascspp_cases = 0;
  double strip_max_dev = 0.0;
  double asconv_max_dev = 0.0;
  double ascspp_max_dev = 0.0;
  int support_checks = 0;
  int support_failures = 0;
  double tolerance = 0.0;

  double max_dev() const;
  bool passed() const;
  std::string to_json() const;
};

/// Randomized equivalence of strip_conv / asconv_forward / ascspp_forward
/// against compositions of reference::conv2d_direct with each strip
/// embedded as a dense 1 x k or k x 1 kernel, plus impulse-response support
/// checks. Cases are split 50/30/20 between the three block types.
ConvCheckReport run_convcheck(const ConvCheckOptions& options = {});

namespace reference {

FeatureMap strip_via_dense(const FeatureMap& x, const StripKernel& k);
FeatureMap asconv_via_dense(const FeatureMap& x, const ASConvParams& p);
FeatureMap ascspp_via_dense(const FeatureMap& x, const ASCSPPParams& p);

}  // namespace reference

double max_abs_diff(const FeatureMap& a, const FeatureMap& b);

}  // namespace ascsw::nn
