#include "xclust/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "xclust/functionals.hpp"
#include "xclust/parallel.hpp"
#include "xclust/random.hpp"

namespace xclust {

using nlohmann::json;

std::vector<Cluster> extract_clusters(std::span<const SeriesPath> paths, const BlockScheme& scheme,
                                      double floor) {
  scheme.validate();
  if (!(floor > 0.0 && floor < 1.0)) throw ParameterError("cluster floor must lie in (0, 1)");
  std::vector<std::vector<Cluster>> per_path(paths.size());
  parallel_for(paths.size(), [&](std::size_t p) {
    const auto& path = paths[p];
    if (path.n != scheme.n) throw ParameterError("extract_clusters: path length != scheme n");
    const double level = path.a_n * scheme.threshold;
    const std::size_t r = scheme.block_length;
    for (std::size_t b = 0; b < scheme.block_count; ++b) {
      double block_max = 0.0;
      for (std::size_t i = b * r; i < (b + 1) * r; ++i) block_max = std::max(block_max, path.norm_at(i));
      if (!(block_max > level)) continue;

      Cluster c;
      c.path_id = p;
      c.block_id = b;
      c.dim = path.dim;
      c.norm = path.model.norm;
      std::vector<double> scaled(path.dim);
      double sup = 0.0;
      for (std::size_t i = b * r; i < (b + 1) * r; ++i) {
        const auto x = path.at(i);
        for (std::size_t k = 0; k < path.dim; ++k) scaled[k] = x[k] / level;
        const double r_i = norm_of(scaled, c.norm);
        if (r_i < floor) continue;
        c.points.insert(c.points.end(), scaled.begin(), scaled.end());
        if (r_i > sup) sup = r_i;  // first maximizing index wins ties
      }
      c.L = sup;
      c.q.resize(c.points.size());
      for (std::size_t k = 0; k < c.points.size(); ++k) c.q[k] = c.points[k] / sup;
      per_path[p].push_back(std::move(c));
    }
  });
  std::vector<Cluster> out;
  for (auto& v : per_path) {
    for (auto& c : v) out.push_back(std::move(c));
  }
  if (out.empty()) {
    throw InsufficientDataError("no block exceeds a_n u",
                                paths.size() * scheme.block_count);
  }
  return out;
}

Cluster raise_floor(const Cluster& c, double floor) {
  if (!(floor > 0.0 && floor < 1.0)) throw ParameterError("cluster floor must lie in (0, 1)");
  Cluster out = c;
  out.points.clear();
  out.q.clear();
  for (std::size_t j = 0; j < c.size(); ++j) {
    const auto x = c.point(j);
    if (norm_of(x, c.norm) < floor) continue;
    out.points.insert(out.points.end(), x.begin(), x.end());
    const auto q = c.q_point(j);
    out.q.insert(out.q.end(), q.begin(), q.end());
  }
  return out;
}

std::vector<double> theta_per_path(std::span<const SeriesPath> paths, const BlockScheme& scheme) {
  scheme.validate();
  std::vector<double> out(paths.size());
  const std::size_t r = scheme.block_length;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& path = paths[p];
    if (path.n != scheme.n) throw ParameterError("estimate_theta: path length != scheme n");
    const double level = path.a_n * scheme.threshold;
    std::size_t exceed = 0;
    for (std::size_t b = 0; b < scheme.block_count; ++b) {
      for (std::size_t i = b * r; i < (b + 1) * r; ++i) {
        if (path.norm_at(i) > level) {
          ++exceed;
          break;
        }
      }
    }
    out[p] = std::pow(scheme.threshold, path.model.alpha) * static_cast<double>(exceed);
  }
  return out;
}

ThetaEstimate estimate_theta(std::span<const SeriesPath> paths, const BlockScheme& scheme) {
  if (paths.empty()) throw InsufficientDataError("estimate_theta: no paths", 0);
  const auto per_path = theta_per_path(paths, scheme);
  const double u_alpha = std::pow(scheme.threshold, paths.front().model.alpha);
  std::size_t blocks = 0;
  for (double v : per_path) blocks += static_cast<std::size_t>(std::llround(v / u_alpha));
  if (blocks == 0) {
    throw InsufficientDataError("estimate_theta: no block exceeds a_n u",
                                paths.size() * scheme.block_count);
  }
  const auto est = mean_estimate(per_path);
  ThetaEstimate out;
  out.value = est.value;
  out.std_error = est.std_error;
  out.paths = paths.size();
  out.exceeding_blocks = blocks;
  out.above_one = est.value > 1.0;
  return out;
}

stats::KsReport check_l_pareto(std::span<const double> sups, double alpha) {
  if (sups.size() < 100) {
    throw InsufficientDataError("check_l_pareto needs at least 100 clusters", sups.size());
  }
  return stats::ks_test(sups, [alpha](double v) { return v <= 1.0 ? 0.0 : 1.0 - std::pow(v, -alpha); });
}

stats::KsReport check_l_pareto(std::span<const Cluster> clusters, double alpha) {
  std::vector<double> sups;
  sups.reserve(clusters.size());
  for (const auto& c : clusters) sups.push_back(c.L);
  return check_l_pareto(std::span<const double>(sups), alpha);
}

std::vector<ClusterStatistic> default_cluster_statistics(double alpha) {
  std::vector<ClusterStatistic> out;
  out.push_back({"count_above_half", [](const Cluster& c) {
                   double k = 0;
                   for (std::size_t j = 0; j < c.size(); ++j) k += c.q_norm(j) > 0.5 ? 1.0 : 0.0;
                   return k;
                 }});
  out.push_back({"sum_q_pow_alpha", [alpha](const Cluster& c) {
                   double s = 0;
                   for (std::size_t j = 0; j < c.size(); ++j) s += std::pow(c.q_norm(j), alpha);
                   return s;
                 }});
  out.push_back({"second_largest_norm", [](const Cluster& c) {
                   double first = 0.0, second = 0.0;
                   for (std::size_t j = 0; j < c.size(); ++j) {
                     const double r = c.q_norm(j);
                     if (r > first) {
                       second = first;
                       first = r;
                     } else if (r > second) {
                       second = r;
                     }
                   }
                   return second;
                 }});
  return out;
}

IndependenceReport check_independence(std::span<const Cluster> clusters,
                                      std::span<const ClusterStatistic> statistics,
                                      std::size_t permutations, std::uint64_t seed) {
  if (clusters.size() < kMinIndependenceClusters) {
    throw InsufficientDataError("check_independence needs at least 500 clusters", clusters.size());
  }
  IndependenceReport report;
  report.clusters = clusters.size();
  std::vector<double> sups(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) sups[i] = clusters[i].L;

  for (std::size_t s = 0; s < statistics.size(); ++s) {
    std::vector<double> g(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) g[i] = statistics[s].fn(clusters[i]);
    const auto test = stats::distance_correlation_test(sups, g, permutations, derive_seed(seed, s));
    report.entries.push_back({statistics[s].name, test.statistic, test.p_value});
  }

  const auto ramp = ramp_functional(1.0, TimeWeight::One, 0.5);
  std::vector<double> weight(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    double g = 0.0;
    for (std::size_t j = 0; j < clusters[i].size(); ++j) g += ramp.spatial(clusters[i].q_norm(j));
    weight[i] = std::exp(-g);
  }
  const double nd = static_cast<double>(clusters.size());
  for (double v : {1.5, 2.0}) {
    double mean_a = 0.0, mean_b = 0.0, mean_ab = 0.0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      const double b = sups[i] > v ? 1.0 : 0.0;
      mean_a += weight[i];
      mean_b += b;
      mean_ab += weight[i] * b;
    }
    mean_a /= nd;
    mean_b /= nd;
    mean_ab /= nd;
    const double residual = mean_ab - mean_a * mean_b;
    std::vector<double> influence(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      const double b = sups[i] > v ? 1.0 : 0.0;
      influence[i] = (weight[i] - mean_a) * (b - mean_b);
    }
    report.factorization.push_back({v, residual, mean_estimate(influence).std_error});
  }
  return report;
}

std::string to_record(const Cluster& c) {
  json q = json::array();
  for (std::size_t j = 0; j < c.size(); ++j) {
    const auto row = c.q_point(j);
    q.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json rec = {{"path", c.path_id}, {"block", c.block_id}, {"L", c.L}, {"Q", q}};
  if (c.norm == Norm::Euclidean) rec["norm"] = "euclidean";
  return rec.dump();
}

Cluster cluster_from_record(const std::string& line) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed cluster record: ") + e.what());
  }
  Cluster c;
  try {
    c.path_id = rec.at("path").get<std::size_t>();
    c.block_id = rec.at("block").get<std::size_t>();
    c.L = rec.at("L").get<double>();
    c.norm = rec.value("norm", std::string("sup")) == "euclidean" ? Norm::Euclidean : Norm::Sup;
    const auto& q = rec.at("Q");
    c.dim = q.empty() ? 1 : q.front().size();
    for (const auto& row : q) {
      if (row.size() != c.dim) throw IoError("cluster record: ragged Q rows");
      for (const auto& v : row) {
        const double x = v.get<double>();
        c.q.push_back(x);
        c.points.push_back(c.L * x);
      }
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed cluster record: ") + e.what());
  }
  return c;
}

void write_clusters(std::ostream& os, std::span<const Cluster> clusters) {
  for (const auto& c : clusters) os << to_record(c) << '\n';
}

std::vector<Cluster> read_clusters(std::istream& is) {
  std::vector<Cluster> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(cluster_from_record(line));
  }
  return out;
}

}  // namespace xclust
