#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "xclust/empirics.hpp"
#include "xclust/stats.hpp"

using namespace xclust;

namespace {

std::vector<SeriesPath> paths_of(const ModelSpec& spec, std::size_t n, std::size_t reps) {
  std::vector<SeriesPath> out;
  for (std::size_t r = 0; r < reps; ++r) out.push_back(generate_replication(spec, n, r));
  return out;
}

}  // namespace

TEST_CASE("block scheme") {
  const auto s = BlockScheme::make(100'000);
  CHECK(s.block_length == 317);
  CHECK(s.block_count == 315);
  CHECK(s.threshold == 1.0);
  const auto t = BlockScheme::make(1000, 0.6, 2.0);
  CHECK(t.block_length == 64);
  CHECK(t.block_count == 15);
  CHECK_THROWS_AS(BlockScheme::make(1000, 1.0), ParameterError);
  CHECK_THROWS_AS(BlockScheme::make(1000, 0.5, 0.0), ParameterError);
  CHECK_THROWS_AS(BlockScheme::with_block_length(10, 11), ParameterError);
}

TEST_CASE("iid tail process: Pareto radius, vanishing neighbours") {
  const auto spec = ModelSpec::iid(1.5).with_seed(10);
  const auto paths = paths_of(spec, 20'000, 10);
  const double x = default_tail_threshold(paths, 0.999);
  const auto w = estimate_tail_process(paths, x, 2);
  CHECK(w.size() >= kMinExceedances);
  std::vector<double> y0;
  std::size_t big_neighbour = 0;
  for (const auto& win : w) {
    CHECK(win.at_lag(0)[0] > 1.0);
    CHECK(win.time >= 2);
    CHECK(win.time + 2 < 20'000);
    y0.push_back(win.at_lag(0)[0]);
    big_neighbour += std::abs(win.at_lag(1)[0]) > 0.5 || std::abs(win.at_lag(-1)[0]) > 0.5;
  }
  CHECK(stats::ks_test(y0, [](double y) { return y <= 1.0 ? 0.0 : 1.0 - std::pow(y, -1.5); }).passes_1pct());
  CHECK(big_neighbour < w.size() / 50 + 3);
}

TEST_CASE("spectral tail process is normalised at lag zero") {
  const auto spec = ModelSpec::moving_maximum(1.0, {1.0, 1.0}).with_seed(2);
  const auto paths = paths_of(spec, 20'000, 10);
  const auto w = estimate_spectral_tail(paths, default_tail_threshold(paths), 1);
  std::size_t equal_next = 0;
  for (const auto& win : w) {
    CHECK(win.at_lag(0)[0] == doctest::Approx(1.0));
    equal_next += win.at_lag(1)[0] > 0.9;
  }
  // Theta_1 = 1 exactly when the exceedance came from the fresh innovation.
  const double frac = static_cast<double>(equal_next) / static_cast<double>(w.size());
  CHECK(std::abs(frac - 0.5) < 3.0 * std::sqrt(0.25 / static_cast<double>(w.size())) + 0.02);
}

TEST_CASE("ar1 spectral ratio at lag one is phi") {
  const auto spec = ModelSpec::ar1(1.0, 0.5).with_seed(4);
  const auto paths = paths_of(spec, 50'000, 4);
  const auto w = estimate_spectral_tail(paths, default_tail_threshold(paths, 0.999), 1);
  std::vector<double> ratio;
  for (const auto& win : w) ratio.push_back(win.at_lag(1)[0]);
  std::nth_element(ratio.begin(), ratio.begin() + static_cast<std::ptrdiff_t>(ratio.size() / 2), ratio.end());
  const double median = ratio[ratio.size() / 2];
  CHECK(median >= 0.5);
  CHECK(median < 0.52);
}

TEST_CASE("tail estimation reports insufficient data with the count") {
  const auto paths = paths_of(ModelSpec::iid(1.0).with_seed(1), 1000, 2);
  try {
    estimate_tail_process(paths, 1e9, 1);
    FAIL("expected InsufficientDataError");
  } catch (const InsufficientDataError& e) {
    CHECK(e.count() == 0);
  }
  CHECK_THROWS_AS(estimate_tail_process(paths, -1.0, 1), ParameterError);
}

TEST_CASE("A' diagnostic on iid data matches the exact product") {
  const std::size_t n = 1000;
  const auto scheme = BlockScheme::make(n);
  const auto f = ramp_functional(1.0, TimeWeight::One, 1.0);
  // Base seeds that differ only in low bits share replication seeds (seed ^ rep).
  const auto spec = ModelSpec::iid(1.0).with_seed(3ull << 40);
  const auto d = diagnose_aprime(spec, n, scheme, f, 2000);

  // n (1 - E e^{-h(X / a_n)}) for unit Pareto with a_n = n, by midpoint rule.
  double c = (1.0 - std::exp(-1.0)) / 2.0;
  const int steps = 200'000;
  for (int i = 0; i < steps; ++i) {
    const double y = 1.0 + (i + 0.5) / steps;
    c += (1.0 - std::exp(1.0 - y)) / (y * y) / steps;
  }
  const double phi = 1.0 - c / static_cast<double>(n);
  const double kr = static_cast<double>(scheme.block_count * scheme.block_length);
  const double joint = std::pow(phi, static_cast<double>(n));
  const double product = std::pow(phi, kr);
  // The block product has a spread of about 0.008 across seeds at 2000 reps.
  CHECK(std::abs(d.product - product) < 0.025);
  CHECK(std::abs(d.difference - (joint - product)) < 3.0 * d.std_error);
  CHECK(std::abs(d.difference) < 3.0 * d.std_error);
  CHECK(d.abs_difference() == std::abs(d.difference));
  CHECK(d.std_error > 0.0);

  CHECK_THROWS_AS(diagnose_aprime(spec, n, scheme, f, 999), ParameterError);
  CHECK_THROWS_AS(diagnose_aprime(spec, 2000, scheme, f, 1000), ParameterError);
}

TEST_CASE("anticlustering diagnostic") {
  const std::size_t n = 10'000;
  const auto scheme = BlockScheme::make(n);
  const auto mm = ModelSpec::moving_maximum(1.0, {1.0, 1.0}).with_seed(6);
  const auto beyond = diagnose_ac(mm, n, scheme, 2, 400);
  CHECK(beyond.value < 0.05);
  CHECK(beyond.std_error >= 0.0);

  // Within the window the neighbour exceeds too half of the time.
  const auto inside = diagnose_ac(mm, n, scheme, 1, 400);
  CHECK(inside.value > 0.3);

  const auto ar = ModelSpec::ar1(1.0, 0.9).with_seed(7);
  const std::size_t lags[] = {1, 2, 5, 10, 50};
  const auto trend = diagnose_ac(ar, n, scheme, lags, 200);
  for (std::size_t i = 1; i < trend.size(); ++i) CHECK(trend[i].value <= trend[i - 1].value);

  CHECK_THROWS_AS(diagnose_ac(mm, n, scheme, 0, 10), ParameterError);
  CHECK_THROWS_AS(diagnose_ac(mm, n, scheme, scheme.block_length, 10), ParameterError);
}
