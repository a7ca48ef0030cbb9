#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xclust/core.hpp"
#include "xclust/limitproc.hpp"
#include "xclust/models.hpp"
#include "xclust/stats.hpp"

namespace xclust {

/// Right-continuous step function on [0, 1]: levels[0] on [0, times[0]),
/// levels[i] on [times[i-1], times[i]), the last level up to and including 1.
/// Canonical form has strictly increasing jump times in (0, 1] and no
/// repeated adjacent levels.
struct StepPath {
  std::vector<double> times;
  std::vector<double> levels{0.0};
  /// Set for maximal paths whose initial level is a raw (possibly negative) X_1 / a_n.
  bool raw = false;

  static StepPath constant(double level);

  /// Validates and canonicalises; levels.size() must be times.size() + 1.
  static StepPath make(std::vector<double> times, std::vector<double> levels, bool raw = false);

  double operator()(double t) const;
  bool nondecreasing() const;
  /// max(., 0), clearing the raw flag.
  StepPath clamped() const;
};

/// Y_n(t) = M'_{floor(nt)} / a_n for t >= 1/n and X_1 / a_n before.
StepPath maximal_path(const SeriesPath& path);

/// T+(m)(t) = sup{x_i : t_i <= t} v 0 for a univariate measure.
StepPath t_plus(const PointMeasure& m);

/// Exact sup_t |f(t) - g(t)|.
double uniform_distance(const StepPath& f, const StepPath& g);

inline constexpr std::size_t kM1Grid = 1000;

/// Discrete Frechet distance (sup metric on (t, x)) between the completed
/// graphs of f and g, each sampled at its vertices plus `grid` points equally
/// spaced in arc length. Raw paths are clamped at 0 first; other
/// non-monotone paths raise DomainError.
double m1_distance(const StepPath& f, const StepPath& g, std::size_t grid = kM1Grid);

/// Bound on the sampling error of m1_distance: the longest sampled segment.
double m1_grid_tolerance(const StepPath& f, const StepPath& g, std::size_t grid = kM1Grid);

/// Discrete Frechet distance between the graphs (no connecting verticals)
/// sampled on a uniform grid of `grid` times plus both paths' jump times.
double j1_distance(const StepPath& f, const StepPath& g, std::size_t grid = kM1Grid);

/// Frechet law G(x) = exp(-kappa x^{-alpha}), x > 0.
struct ExtremalLaw {
  double kappa = 1.0;
  double alpha = 1.0;

  void validate() const;
  double cdf(double x, double s = 1.0) const;  // G^s
  double quantile(double p) const;             // of G
};

/// theta E U^alpha with U = sup_j Q_j v 0; exact when the sampler has at most
/// reps atoms.
Estimate kappa(double theta, double alpha, const QSampler& q, std::size_t reps = 10'000,
               std::uint64_t seed = 0x6a99a);

inline constexpr std::size_t kMinFidiPaths = 500;

struct FidiReport {
  std::vector<double> times;
  std::vector<stats::KsReport> marginals;  // Y(s_i) against G^{s_i}
  std::vector<double> grid;                // G quantiles at 0.25, 0.5, 0.75
  double joint_max_deviation = 0.0;        // sup over grid^k of |F_emp - G_{s_1..s_k}|
  std::size_t paths = 0;
};

/// Joint law of G-extremal process values at s_1 < ... < s_k.
double extremal_joint_cdf(const ExtremalLaw& law, std::span<const double> times,
                          std::span<const double> x);

FidiReport extremal_fidi_check(std::span<const StepPath> paths, const ExtremalLaw& law,
                               std::span<const double> times);

/// {"times":[..],"levels":[..],"raw":..}
std::string to_record(const StepPath& p);
StepPath step_path_from_record(const std::string& line);
std::string fidi_record(const FidiReport& r);

}  // namespace xclust
