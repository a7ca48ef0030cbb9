#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xclust/core.hpp"

namespace xclust {

enum class ModelKind { IidPareto, MovingMaximum, Ar1, MmMultivariate };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Catalog of stationary regularly varying models built on signed unit-Pareto
/// innovations (magnitude Pareto(alpha), positive with probability sign_weight).
///
///   iid-pareto       X_t = d independent signed Pareto coordinates
///   moving-maximum   X_t = max_j c_j Z_{t-j}, Z_t >= 0
///   ar1              X_t = phi X_{t-1} + Z_t
///   mm-multivariate  coordinate k is max_j c_{kj} Z^{(k)}_{t-j}; with
///                    common_shock all coordinates share one innovation stream
struct ModelSpec {
  ModelKind kind = ModelKind::IidPareto;
  double alpha = 1.0;
  std::size_t dim = 1;
  double sign_weight = 1.0;
  /// One row of c_0..c_m per coordinate (moving-maximum uses a single row).
  std::vector<std::vector<double>> coefficients;
  double phi = 0.0;
  bool common_shock = false;
  Norm norm = Norm::Sup;
  std::uint64_t seed = 0;

  static ModelSpec iid(double alpha, double p = 1.0, std::size_t dim = 1);
  static ModelSpec moving_maximum(double alpha, std::vector<double> c);
  static ModelSpec ar1(double alpha, double phi, double p = 1.0);
  static ModelSpec mm_multivariate(double alpha, std::vector<std::vector<double>> c,
                                   bool common_shock);

  ModelSpec with_seed(std::uint64_t s) const {
    ModelSpec copy = *this;
    copy.seed = s;
    return copy;
  }

  /// Throws ParameterError when the parameters are outside the model's domain.
  void validate() const;

  /// Number of innovations discarded before the returned window starts.
  std::size_t warm_up() const;

  /// Largest lag with direct dependence; nullopt for infinite-memory models.
  std::optional<std::size_t> dependence_window() const;

  std::string describe() const;
};

/// A stationary sample path X_1..X_n stored row-major (n x dim).
struct SeriesPath {
  std::vector<double> values;
  std::size_t n = 0;
  std::size_t dim = 1;
  double a_n = 1.0;
  ModelSpec model;

  std::span<const double> at(std::size_t i) const { return {values.data() + i * dim, dim}; }
  double norm_at(std::size_t i) const { return norm_of(at(i), model.norm); }
};

SeriesPath generate(const ModelSpec& spec, std::size_t n);

/// Path for replication `rep`: the model seed is replaced by derive_seed(seed, rep).
SeriesPath generate_replication(const ModelSpec& spec, std::size_t n, std::uint64_t rep);

/// a_n with n P(||X_0|| > a_n) = 1. Closed form or exact root of the marginal
/// tail where one exists; otherwise a pilot-sample estimate with a fixed
/// model-level pilot seed, cached per (model, n).
double normalizing_constant(const ModelSpec& spec, std::size_t n);

/// Same as above with an explicit pilot seed (bypasses the cache).
double normalizing_constant(const ModelSpec& spec, std::size_t n, std::uint64_t pilot_seed);

/// Plain empirical (1 - 1/n)-quantile of ||X_0|| over `draws` stationary draws.
double pilot_quantile(const ModelSpec& spec, std::size_t n, std::uint64_t pilot_seed,
                      std::size_t draws = 1'000'000);

/// Exact P(||X_0|| > x) for models with a closed-form marginal tail.
std::optional<double> exact_marginal_tail(const ModelSpec& spec, double x);

/// Closed-form extremal index of (||X_t||), nullopt when not known.
std::optional<double> theoretical_theta(const ModelSpec& spec);

}  // namespace xclust
