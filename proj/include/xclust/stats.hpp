#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "xclust/core.hpp"

namespace xclust::stats {

/// One-sample or two-sample Kolmogorov-Smirnov result with the asymptotic
/// critical values c / sqrt(n_eff) at the 5% (c = 1.36) and 1% (c = 1.63) levels.
struct KsReport {
  double statistic = 0.0;
  std::size_t sample_size = 0;
  double critical_5 = 0.0;
  double critical_1 = 0.0;

  bool passes_1pct() const { return statistic < critical_1; }
  bool passes_5pct() const { return statistic < critical_5; }
};

/// Sup distance between the empirical CDF of `sample` and `cdf`.
KsReport ks_test(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Two-sample statistic; critical values use n_eff = n m / (n + m).
KsReport ks_two_sample(std::span<const double> a, std::span<const double> b);

struct HillEstimate {
  double alpha = 0.0;
  double std_error = 0.0;
  std::size_t k = 0;
};

/// Hill estimator over the top k + 1 order statistics, std error alpha / sqrt(k).
HillEstimate hill_estimator(std::span<const double> sample, std::size_t k);

/// Hill estimator with k = ceil(n^0.6).
HillEstimate hill_estimator(std::span<const double> sample);

std::size_t default_hill_k(std::size_t n);

struct DcorResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
};

/// Sample distance correlation (V-statistic normalisation) of two real
/// samples, computed in O(n log n). Zero when either sample is constant.
double distance_correlation(std::span<const double> x, std::span<const double> y);

/// Distance correlation with a permutation p-value (1 + #{perm >= obs}) / (1 + P).
DcorResult distance_correlation_test(std::span<const double> x, std::span<const double> y,
                                     std::size_t permutations = 1000,
                                     std::uint64_t seed = 0x5eed);

}  // namespace xclust::stats
