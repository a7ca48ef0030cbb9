#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xclust/core.hpp"
#include "xclust/empirics.hpp"
#include "xclust/models.hpp"
#include "xclust/stats.hpp"

namespace xclust {

/// Exceedance cluster of one block: points (a_n u)^{-1} X_i whose norm is at
/// least the floor, their largest norm L >= 1, and Q_j = points_j / L.
struct Cluster {
  std::size_t path_id = 0;
  std::size_t block_id = 0;
  std::size_t dim = 1;
  Norm norm = Norm::Sup;
  double L = 1.0;
  std::vector<double> points;  // size() x dim, time order
  std::vector<double> q;       // same layout as points

  std::size_t size() const { return dim == 0 ? 0 : points.size() / dim; }
  std::span<const double> point(std::size_t j) const { return {points.data() + j * dim, dim}; }
  std::span<const double> q_point(std::size_t j) const { return {q.data() + j * dim, dim}; }
  double q_norm(std::size_t j) const { return norm_of(q_point(j), norm); }
};

inline constexpr double kDefaultClusterFloor = 1e-3;

/// Blocks with M_{r_n} > a_n u become clusters; others are skipped.
std::vector<Cluster> extract_clusters(std::span<const SeriesPath> paths, const BlockScheme& scheme,
                                      double floor = kDefaultClusterFloor);

/// Drops the points below a higher floor; L and Q of the survivors are unchanged.
Cluster raise_floor(const Cluster& c, double floor);

/// Floor used for the independence check. Below-threshold neighbours above a
/// small absolute floor enter Q scaled by 1/L, a finite-n dependence of order
/// r_n / n that the permutation test resolves at a few thousand clusters.
inline constexpr double kIndependenceFloor = 0.1;

struct ThetaEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
  std::size_t exceeding_blocks = 0;
  /// Set when the estimate exceeds one (possible by sampling noise).
  bool above_one = false;
};

/// theta-hat = u^alpha k_n P-hat(M_{r_n} > a_n u) per path, i.e. u^alpha times the
/// number of exceeding blocks, averaged over paths.
ThetaEstimate estimate_theta(std::span<const SeriesPath> paths, const BlockScheme& scheme);

/// Per-path theta-hat values (same formula), for joint error computations.
std::vector<double> theta_per_path(std::span<const SeriesPath> paths, const BlockScheme& scheme);

/// KS of the cluster sups against P(L > v) = v^{-alpha}, v >= 1.
stats::KsReport check_l_pareto(std::span<const Cluster> clusters, double alpha);
stats::KsReport check_l_pareto(std::span<const double> sups, double alpha);

struct ClusterStatistic {
  std::string name;
  std::function<double(const Cluster&)> fn;
};

/// Point count with ||Q_j|| > 0.5, sum_j ||Q_j||^alpha, second-largest ||Q_j||.
std::vector<ClusterStatistic> default_cluster_statistics(double alpha);

struct IndependenceReport {
  struct Entry {
    std::string name;
    double dcor = 0.0;
    double p_value = 1.0;
  };
  struct Factorization {
    double v = 1.0;
    double residual = 0.0;  // E[e^{-G} 1{L>v}] - E[e^{-G}] P(L>v)
    double std_error = 0.0;
  };
  std::size_t clusters = 0;
  std::vector<Entry> entries;
  std::vector<Factorization> factorization;
};

inline constexpr std::size_t kMinIndependenceClusters = 500;

/// Distance correlation between L and each statistic of Q (permutation
/// p-values), plus the factorisation residual at v in {1.5, 2} for
/// G = sum_j ramp_{0.5}(||Q_j||).
IndependenceReport check_independence(std::span<const Cluster> clusters,
                                      std::span<const ClusterStatistic> statistics,
                                      std::size_t permutations = 1000,
                                      std::uint64_t seed = 0x1d3e);

/// One JSON object per line: {"path":..,"block":..,"L":..,"Q":[[..],..]}.
std::string to_record(const Cluster& c);
Cluster cluster_from_record(const std::string& line);
void write_clusters(std::ostream& os, std::span<const Cluster> clusters);
std::vector<Cluster> read_clusters(std::istream& is);

}  // namespace xclust
