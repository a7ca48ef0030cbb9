#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xclust/clusters.hpp"
#include "xclust/core.hpp"
#include "xclust/functionals.hpp"
#include "xclust/models.hpp"
#include "xclust/random.hpp"
#include "xclust/stats.hpp"

namespace xclust {

/// Discrete law over Q-clusters. Each atom is a finite sequence of points in
/// R^d (row-major) whose largest norm is one.
class QSampler {
 public:
  QSampler() = default;

  /// General discrete law; weights need not be normalised.
  static QSampler discrete(std::vector<std::vector<double>> atoms, std::vector<double> weights,
                           std::size_t dim = 1, Norm norm = Norm::Sup);

  /// The single cluster q (dim x size, row-major).
  static QSampler point_mass(std::vector<double> q, std::size_t dim = 1, Norm norm = Norm::Sup);

  /// Closed-form cluster law of a catalog model. ar1 clusters phi^j are cut
  /// once phi^j < eps. Throws UnsupportedParameterError when no closed form
  /// is known (Euclidean norm with correlated coordinates never is).
  static QSampler from_model(const ModelSpec& spec, double eps = 1e-12);

  /// Uniform resampling over the Q sequences of extracted clusters.
  static QSampler from_clusters(std::span<const Cluster> clusters);

  std::size_t dim() const { return dim_; }
  Norm norm() const { return norm_; }
  bool empirical() const { return empirical_; }
  std::size_t atom_count() const { return atoms_.size(); }
  std::span<const double> atom(std::size_t a) const { return atoms_[a]; }
  std::size_t atom_size(std::size_t a) const { return atoms_[a].size() / dim_; }
  double probability(std::size_t a) const;

  std::size_t draw_index(Engine& eng) const;
  std::span<const double> draw(Engine& eng) const { return atom(draw_index(eng)); }

 private:
  std::vector<std::vector<double>> atoms_;
  std::vector<double> cumulative_;  // normalised, last entry 1
  std::size_t dim_ = 1;
  Norm norm_ = Norm::Sup;
  bool empirical_ = false;

  void finish(std::vector<double> weights);
};

/// Parameters of the limit cluster process restricted to anchors above u.
struct LimitSpec {
  double alpha = 1.0;
  double theta = 1.0;
  double truncation = 1.0;  // u
  QSampler q;

  std::size_t dim() const { return q.dim(); }
  void validate() const;

  /// Uses the closed-form theta and cluster law of the model.
  static LimitSpec from_model(const ModelSpec& spec, double truncation = 1.0);
};

/// Finite collection of space-time points (t, x) with t in [0, 1]. Samples of
/// the limit process also carry per-cluster anchors (T_i, P_i).
struct PointMeasure {
  std::size_t dim = 1;
  Norm norm = Norm::Sup;
  double floor = 1.0;
  std::vector<double> times;
  std::vector<double> coords;            // size() x dim
  std::vector<std::size_t> cluster_ids;  // empty for measures built from paths
  std::vector<double> anchors;           // P_i
  std::vector<double> anchor_times;      // T_i

  std::size_t size() const { return times.size(); }
  std::span<const double> x(std::size_t i) const { return {coords.data() + i * dim, dim}; }
  double norm_at(std::size_t i) const { return norm_of(x(i), norm); }
};

/// N_n restricted to ||x|| > floor: points (i/n, X_i / a_n), i = 1..n.
PointMeasure point_measure_from_path(const SeriesPath& path, double floor);

/// One exact draw of the limit process with anchors above spec.truncation.
PointMeasure sample_limit(const LimitSpec& spec, std::uint64_t seed);

/// Keeps the clusters whose anchor exceeds u_prime (anchors must be present).
PointMeasure restrict_anchors(const PointMeasure& m, double u_prime);

/// exp(-sum over points of f(t, x)).
double laplace_weight(const PointMeasure& m, const TestFunctional& f);

/// Closed-form Laplace functional. The time integral is done analytically and
/// the magnitude integral by Gauss-Kronrod after w = v^{-alpha}. The expectation
/// over Q is exact when the sampler has at most q_reps atoms, otherwise an
/// average over q_reps draws (std_error then reports that inner MC error).
Estimate laplace_closed_form(const LimitSpec& spec, const TestFunctional& f,
                             std::size_t q_reps = 10'000, std::uint64_t seed = 0x1a91ace);

inline constexpr std::size_t kMinLaplaceReps = 1000;

/// Monte Carlo E exp(-N(f)) for each functional over `reps` measures produced
/// by source(rep), rep = 0..reps-1.
std::vector<Estimate> laplace_empirical(const std::function<PointMeasure(std::size_t)>& source,
                                        std::span<const TestFunctional> fs, std::size_t reps);

/// Source = sample_limit(spec, derive_seed(seed, rep)).
std::vector<Estimate> laplace_empirical(const LimitSpec& spec, std::span<const TestFunctional> fs,
                                        std::size_t reps, std::uint64_t seed);

/// Source = N_n of generate_replication(model, n, rep).
std::vector<Estimate> laplace_empirical(const ModelSpec& model, std::size_t n,
                                        std::span<const TestFunctional> fs, std::size_t reps);

/// theta alpha / (2 - alpha) E[(sum_j <t, Q_j>)_+^alpha]; t must be a
/// Euclidean unit vector. Exact over atoms when there are at most reps of them
/// (for an empirical sampler std_error is then the sampling error over clusters).
Estimate spectral_functional(const QSampler& q, double theta, double alpha,
                             std::span<const double> t, std::size_t reps = 10'000,
                             std::uint64_t seed = 0x5bec);

/// b(t) = (1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2)) * value.
double cluster_index(double spectral_value, double alpha);

struct RestrictionReport {
  stats::KsReport anchors;  // two-sample KS on anchor magnitudes
  std::size_t restricted_count = 0;
  std::size_t direct_count = 0;
  double count_p_value = 1.0;  // two-sided exact conditional binomial test
};

/// Compares samples at u restricted to anchors above u_prime against direct
/// samples at u_prime, `samples` draws each.
RestrictionReport restriction_check(const LimitSpec& spec, double u_prime, std::size_t samples,
                                    std::uint64_t seed);

/// Line-delimited records {"sample","cluster","t","x":[..]}; anchors are not stored.
void write_point_measures(std::ostream& os, std::span<const PointMeasure> measures);
std::vector<PointMeasure> read_point_measures(std::istream& is, std::size_t dim,
                                              Norm norm = Norm::Sup);

/// {"functional","value","stderr"}.
std::string laplace_record(const TestFunctional& f, const Estimate& e);

}  // namespace xclust
