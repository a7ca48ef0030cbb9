#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xclust/core.hpp"
#include "xclust/functionals.hpp"
#include "xclust/models.hpp"

namespace xclust {

/// Disjoint blocks of length r_n over a path of length n; k_n = floor(n / r_n).
struct BlockScheme {
  std::size_t n = 1;
  std::size_t block_length = 1;
  std::size_t block_count = 1;
  double threshold = 1.0;

  /// r_n = ceil(n^exponent), exponent in (0, 1).
  static BlockScheme make(std::size_t n, double exponent = 0.5, double threshold = 1.0);
  static BlockScheme with_block_length(std::size_t n, std::size_t r, double threshold = 1.0);

  void validate() const;
};

/// Window (X_{i-m}, ..., X_{i+m}) / scale around an exceedance at time i.
struct TailWindow {
  std::size_t max_lag = 0;
  std::size_t dim = 1;
  double scale = 1.0;
  std::size_t path_index = 0;
  std::size_t time = 0;
  std::vector<double> values;  // (2m + 1) x dim, lag -m first

  std::span<const double> at_lag(std::ptrdiff_t lag) const {
    const auto row = static_cast<std::size_t>(lag + static_cast<std::ptrdiff_t>(max_lag));
    return {values.data() + row * dim, dim};
  }
};

inline constexpr std::size_t kMinExceedances = 100;

/// Windows scaled by the threshold x: lag-0 norms sample ||Y_0||.
std::vector<TailWindow> estimate_tail_process(std::span<const SeriesPath> paths, double x,
                                              std::size_t max_lag);

/// Windows scaled by ||X_i|| itself: lag-0 norms are exactly one.
std::vector<TailWindow> estimate_spectral_tail(std::span<const SeriesPath> paths, double x,
                                               std::size_t max_lag);

/// Empirical `level`-quantile of the pooled norms (default 0.999).
double default_tail_threshold(std::span<const SeriesPath> paths, double level = 0.999);

struct AprimeDiagnostic {
  double joint = 0.0;       // E exp{-sum_{i<=n} f(i/n, X_i/a_n)}
  double product = 0.0;     // prod_k E exp{-sum_{i<=r_n} f(k r_n/n, X_i/a_n)}
  double difference = 0.0;  // joint - product
  double std_error = 0.0;

  double abs_difference() const { return difference < 0 ? -difference : difference; }
};

/// Monte Carlo estimate of the block-factorisation gap. Both expectations use
/// the same `reps` independent paths; the block expectations pool every block
/// of every path (stationarity), and the standard error is the delta-method
/// error over replications.
AprimeDiagnostic diagnose_aprime(const ModelSpec& spec, std::size_t n, const BlockScheme& scheme,
                                 const TestFunctional& f, std::size_t reps);

/// P(max_{m <= |i| <= r_n} ||X_i|| > a_n u | ||X_0|| > a_n u) for each lag m,
/// all lags evaluated on the same paths (so the estimates are nonincreasing in m).
std::vector<Estimate> diagnose_ac(const ModelSpec& spec, std::size_t n, const BlockScheme& scheme,
                                  std::span<const std::size_t> lags, std::size_t reps);

Estimate diagnose_ac(const ModelSpec& spec, std::size_t n, const BlockScheme& scheme,
                     std::size_t lag, std::size_t reps);

}  // namespace xclust
