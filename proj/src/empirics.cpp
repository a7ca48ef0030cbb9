#include "xclust/empirics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xclust/parallel.hpp"

namespace xclust {

BlockScheme BlockScheme::make(std::size_t n, double exponent, double threshold) {
  if (!(exponent > 0.0 && exponent < 1.0)) {
    throw ParameterError("block exponent must lie in (0, 1)");
  }
  const auto r = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), exponent)));
  return with_block_length(n, std::max<std::size_t>(r, 1), threshold);
}

BlockScheme BlockScheme::with_block_length(std::size_t n, std::size_t r, double threshold) {
  BlockScheme s;
  s.n = n;
  s.block_length = r;
  s.block_count = r == 0 ? 0 : n / r;
  s.threshold = threshold;
  s.validate();
  return s;
}

void BlockScheme::validate() const {
  if (n < 1) throw ParameterError("block scheme: n must be at least 1");
  if (block_length < 1 || block_length > n) {
    throw ParameterError("block scheme: need 1 <= r_n <= n");
  }
  if (block_count != n / block_length) throw ParameterError("block scheme: k_n != floor(n / r_n)");
  if (!(threshold > 0.0)) throw ParameterError("block scheme: threshold u must be positive");
}

namespace {

std::vector<TailWindow> collect_windows(std::span<const SeriesPath> paths, double x,
                                        std::size_t m, bool spectral) {
  if (!(x > 0.0)) throw ParameterError("tail threshold must be positive");
  std::vector<TailWindow> out;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto& path = paths[p];
    if (path.n < 2 * m + 1) continue;
    for (std::size_t i = m; i + m < path.n; ++i) {
      const double r = path.norm_at(i);
      if (!(r > x)) continue;
      TailWindow w;
      w.max_lag = m;
      w.dim = path.dim;
      w.scale = spectral ? r : x;
      w.path_index = p;
      w.time = i;
      w.values.reserve((2 * m + 1) * path.dim);
      for (std::size_t j = i - m; j <= i + m; ++j) {
        for (double v : path.at(j)) w.values.push_back(v / w.scale);
      }
      out.push_back(std::move(w));
    }
  }
  if (out.size() < kMinExceedances) {
    throw InsufficientDataError("tail process estimation needs at least 100 exceedances",
                                out.size());
  }
  return out;
}

}  // namespace

std::vector<TailWindow> estimate_tail_process(std::span<const SeriesPath> paths, double x,
                                              std::size_t max_lag) {
  return collect_windows(paths, x, max_lag, false);
}

std::vector<TailWindow> estimate_spectral_tail(std::span<const SeriesPath> paths, double x,
                                               std::size_t max_lag) {
  return collect_windows(paths, x, max_lag, true);
}

double default_tail_threshold(std::span<const SeriesPath> paths, double level) {
  std::vector<double> norms;
  for (const auto& p : paths) {
    for (std::size_t i = 0; i < p.n; ++i) norms.push_back(p.norm_at(i));
  }
  if (norms.empty()) throw InsufficientDataError("no observations for threshold", 0);
  auto idx = static_cast<std::size_t>(std::ceil(level * static_cast<double>(norms.size())));
  idx = std::clamp<std::size_t>(idx, 1, norms.size()) - 1;
  std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(idx), norms.end());
  return norms[idx];
}

AprimeDiagnostic diagnose_aprime(const ModelSpec& spec, std::size_t n, const BlockScheme& scheme,
                                 const TestFunctional& f, std::size_t reps) {
  scheme.validate();
  f.validate();
  if (scheme.n != n) throw ParameterError("diagnose_aprime: scheme built for a different n");
  if (reps < 1000) throw ParameterError("diagnose_aprime: needs at least 1000 replications");

  const std::size_t r = scheme.block_length;
  const std::size_t k_n = scheme.block_count;
  const double nd = static_cast<double>(n);
  std::vector<double> block_time_factor(k_n);
  for (std::size_t k = 0; k < k_n; ++k) {
    block_time_factor[k] = f.time_factor(static_cast<double>((k + 1) * r) / nd);
  }

  std::vector<double> joint(reps);
  std::vector<double> block_means(reps * k_n);  // per replication, per k: mean over blocks

  parallel_for(reps, [&](std::size_t rep) {
    const auto path = generate_replication(spec, n, rep);
    double joint_sum = 0.0;
    std::vector<double> active;  // nonzero block sums of h
    for (std::size_t b = 0; b < k_n; ++b) {
      double h = 0.0;
      for (std::size_t i = b * r; i < (b + 1) * r; ++i) {
        h += f.spatial(path.norm_at(i) / path.a_n);
      }
      if (h > 0.0) active.push_back(h);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double h = f.spatial(path.norm_at(i) / path.a_n);
      if (h > 0.0) joint_sum += f.scale * f.time_factor(static_cast<double>(i + 1) / nd) * h;
    }
    joint[rep] = std::exp(-joint_sum);
    for (std::size_t k = 0; k < k_n; ++k) {
      double acc = static_cast<double>(k_n - active.size());
      for (double h : active) acc += std::exp(-f.scale * block_time_factor[k] * h);
      block_means[rep * k_n + k] = acc / static_cast<double>(k_n);
    }
  });

  const double rd = static_cast<double>(reps);
  const double joint_mean = std::accumulate(joint.begin(), joint.end(), 0.0) / rd;
  std::vector<double> e_k(k_n, 0.0);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    for (std::size_t k = 0; k < k_n; ++k) e_k[k] += block_means[rep * k_n + k];
  }
  double log_product = 0.0;
  for (double& e : e_k) {
    e /= rd;
    log_product += std::log(e);
  }
  const double product = std::exp(log_product);

  // Influence of each replication on joint - product (delta method).
  std::vector<double> influence(reps);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    double rel = 0.0;
    for (std::size_t k = 0; k < k_n; ++k) rel += (block_means[rep * k_n + k] - e_k[k]) / e_k[k];
    influence[rep] = (joint[rep] - joint_mean) - product * rel;
  }
  AprimeDiagnostic out;
  out.joint = joint_mean;
  out.product = product;
  out.difference = joint_mean - product;
  out.std_error = mean_estimate(influence).std_error;
  return out;
}

std::vector<Estimate> diagnose_ac(const ModelSpec& spec, std::size_t n, const BlockScheme& scheme,
                                  std::span<const std::size_t> lags, std::size_t reps) {
  scheme.validate();
  if (scheme.n != n) throw ParameterError("diagnose_ac: scheme built for a different n");
  const std::size_t r = scheme.block_length;
  for (std::size_t m : lags) {
    if (m < 1 || m >= r) throw ParameterError("diagnose_ac: need 1 <= m < r_n");
  }
  if (reps < 1) throw ParameterError("diagnose_ac: needs at least one replication");
  if (2 * r + 1 > n) throw ParameterError("diagnose_ac: path too short for a +-r_n window");

  const std::size_t L = lags.size();
  std::vector<double> counts(reps, 0.0);
  std::vector<double> hits(reps * L, 0.0);

  parallel_for(reps, [&](std::size_t rep) {
    const auto path = generate_replication(spec, n, rep);
    const double level = path.a_n * scheme.threshold;
    std::vector<std::size_t> exc;
    for (std::size_t i = 0; i < n; ++i) {
      if (path.norm_at(i) > level) exc.push_back(i);
    }
    for (std::size_t e = 0; e < exc.size(); ++e) {
      const std::size_t i = exc[e];
      if (i < r || i + r >= n) continue;
      counts[rep] += 1.0;
      // Farthest other exceedance within distance r_n.
      std::size_t farthest = 0;
      for (std::size_t o = 0; o < exc.size(); ++o) {
        if (o == e) continue;
        const std::size_t dist = exc[o] > i ? exc[o] - i : i - exc[o];
        if (dist <= r) farthest = std::max(farthest, dist);
      }
      for (std::size_t l = 0; l < L; ++l) {
        if (farthest >= lags[l]) hits[rep * L + l] += 1.0;
      }
    }
  });

  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total == 0.0) throw InsufficientDataError("diagnose_ac: no exceedances of a_n u", 0);
  const double mean_count = total / static_cast<double>(reps);
  std::vector<Estimate> out(L);
  std::vector<double> influence(reps);
  for (std::size_t l = 0; l < L; ++l) {
    double h = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) h += hits[rep * L + l];
    const double ratio = h / total;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      influence[rep] = (hits[rep * L + l] - ratio * counts[rep]) / mean_count;
    }
    out[l] = {ratio, mean_estimate(influence).std_error};
  }
  return out;
}

Estimate diagnose_ac(const ModelSpec& spec, std::size_t n, const BlockScheme& scheme,
                     std::size_t lag, std::size_t reps) {
  const std::size_t lags[] = {lag};
  return diagnose_ac(spec, n, scheme, lags, reps)[0];
}

}  // namespace xclust
