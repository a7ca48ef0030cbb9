#include "xclust/limitproc.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <nlohmann/json.hpp>

#include "xclust/parallel.hpp"

namespace xclust {

using nlohmann::json;

void QSampler::finish(std::vector<double> weights) {
  if (atoms_.empty()) throw ParameterError("Q sampler needs at least one cluster");
  if (weights.size() != atoms_.size()) throw ParameterError("Q sampler: one weight per cluster");
  if (dim_ == 0) throw ParameterError("Q sampler: dimension must be positive");
  double total = 0.0;
  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    const auto& q = atoms_[a];
    if (q.empty() || q.size() % dim_ != 0) throw DimensionError("Q cluster size is not a multiple of d");
    double sup = 0.0;
    for (std::size_t j = 0; j < q.size() / dim_; ++j) {
      sup = std::max(sup, norm_of(std::span<const double>(q.data() + j * dim_, dim_), norm_));
    }
    if (std::abs(sup - 1.0) > 1e-9) throw ParameterError("Q cluster must have sup_j ||Q_j|| = 1");
    if (!(weights[a] >= 0.0)) throw ParameterError("Q sampler weights must be nonnegative");
    total += weights[a];
  }
  if (!(total > 0.0)) throw ParameterError("Q sampler weights sum to zero");
  cumulative_.resize(weights.size());
  double acc = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    acc += weights[a] / total;
    cumulative_[a] = acc;
  }
  cumulative_.back() = 1.0;
}

QSampler QSampler::discrete(std::vector<std::vector<double>> atoms, std::vector<double> weights,
                            std::size_t dim, Norm norm) {
  QSampler s;
  s.atoms_ = std::move(atoms);
  s.dim_ = dim;
  s.norm_ = norm;
  s.finish(std::move(weights));
  return s;
}

QSampler QSampler::point_mass(std::vector<double> q, std::size_t dim, Norm norm) {
  return discrete({std::move(q)}, {1.0}, dim, norm);
}

QSampler QSampler::from_model(const ModelSpec& spec, double eps) {
  spec.validate();
  const std::size_t d = spec.dim;
  const double p = spec.sign_weight;
  std::vector<std::vector<double>> atoms;
  std::vector<double> weights;
  switch (spec.kind) {
    case ModelKind::IidPareto:
      for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> e(d, 0.0);
        e[k] = 1.0;
        atoms.push_back(e);
        weights.push_back(p);
        if (p < 1.0) {
          e[k] = -1.0;
          atoms.push_back(e);
          weights.push_back(1.0 - p);
        }
      }
      break;
    case ModelKind::Ar1: {
      std::vector<double> q{1.0};
      for (double c = spec.phi; c >= eps && c > 0.0; c *= spec.phi) q.push_back(c);
      atoms.push_back(q);
      weights.push_back(p);
      if (p < 1.0) {
        for (double& v : q) v = -v;
        atoms.push_back(q);
        weights.push_back(1.0 - p);
      }
      break;
    }
    case ModelKind::MovingMaximum:
    case ModelKind::MmMultivariate: {
      std::size_t len = 0;
      for (const auto& row : spec.coefficients) len = std::max(len, row.size());
      auto c = [&](std::size_t k, std::size_t j) {
        const auto& row = spec.coefficients[k];
        return j < row.size() ? row[j] : 0.0;
      };
      if (spec.common_shock || d == 1) {
        std::vector<double> q(len * d);
        double sup = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
          for (std::size_t k = 0; k < d; ++k) q[j * d + k] = c(k, j);
          sup = std::max(sup, norm_of(std::span<const double>(q.data() + j * d, d), spec.norm));
        }
        for (double& v : q) v /= sup;
        atoms.push_back(q);
        weights.push_back(1.0);
      } else {
        // Clusters come from one coordinate's innovation at a time; a
        // coordinate's share of clusters is proportional to (max_j c_kj)^alpha.
        for (std::size_t k = 0; k < d; ++k) {
          const auto& row = spec.coefficients[k];
          const double top = *std::max_element(row.begin(), row.end());
          if (top <= 0.0) continue;
          std::vector<double> q(row.size() * d, 0.0);
          for (std::size_t j = 0; j < row.size(); ++j) q[j * d + k] = row[j] / top;
          atoms.push_back(q);
          weights.push_back(std::pow(top, spec.alpha));
        }
      }
      break;
    }
  }
  return discrete(std::move(atoms), std::move(weights), d, spec.norm);
}

QSampler QSampler::from_clusters(std::span<const Cluster> clusters) {
  if (clusters.empty()) throw InsufficientDataError("Q sampler needs at least one cluster", 0);
  std::vector<std::vector<double>> atoms;
  atoms.reserve(clusters.size());
  for (const auto& c : clusters) {
    if (c.dim != clusters.front().dim) throw DimensionError("clusters of mixed dimension");
    atoms.push_back(c.q);
  }
  QSampler s = discrete(std::move(atoms), std::vector<double>(clusters.size(), 1.0),
                        clusters.front().dim, clusters.front().norm);
  s.empirical_ = true;
  return s;
}

double QSampler::probability(std::size_t a) const {
  return a == 0 ? cumulative_[0] : cumulative_[a] - cumulative_[a - 1];
}

std::size_t QSampler::draw_index(Engine& eng) const {
  if (cumulative_.size() == 1) return 0;
  const double u = uniform01(eng);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                               cumulative_.size() - 1);
}

void LimitSpec::validate() const {
  if (!(alpha > 0.0)) throw ParameterError("limit process: alpha must be positive");
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("limit process: theta must lie in (0, 1]");
  if (!(truncation > 0.0)) throw ParameterError("limit process: truncation u must be positive");
  if (q.atom_count() == 0) throw ParameterError("limit process: empty Q sampler");
}

LimitSpec LimitSpec::from_model(const ModelSpec& spec, double truncation) {
  const auto theta = theoretical_theta(spec);
  if (!theta) throw UnsupportedParameterError("no closed-form extremal index for " + spec.describe());
  LimitSpec out;
  out.alpha = spec.alpha;
  out.theta = *theta;
  out.truncation = truncation;
  out.q = QSampler::from_model(spec);
  out.validate();
  return out;
}

PointMeasure point_measure_from_path(const SeriesPath& path, double floor) {
  if (!(floor > 0.0)) throw ParameterError("point measure floor must be positive");
  PointMeasure m;
  m.dim = path.dim;
  m.norm = path.model.norm;
  m.floor = floor;
  const double nd = static_cast<double>(path.n);
  for (std::size_t i = 0; i < path.n; ++i) {
    if (!(path.norm_at(i) > floor * path.a_n)) continue;
    m.times.push_back(static_cast<double>(i + 1) / nd);
    for (double v : path.at(i)) m.coords.push_back(v / path.a_n);
  }
  return m;
}

PointMeasure sample_limit(const LimitSpec& spec, std::uint64_t seed) {
  spec.validate();
  auto eng = make_engine(seed);
  PointMeasure m;
  m.dim = spec.dim();
  m.norm = spec.q.norm();
  m.floor = spec.truncation;
  const double u = spec.truncation;
  const auto k = poisson(eng, spec.theta * std::pow(u, -spec.alpha));
  for (std::uint64_t i = 0; i < k; ++i) {
    const double t = uniform01(eng);
    const double p = u * std::pow(uniform_open0(eng), -1.0 / spec.alpha);
    const auto q = spec.q.draw(eng);
    m.anchor_times.push_back(t);
    m.anchors.push_back(p);
    for (std::size_t j = 0; j < q.size() / m.dim; ++j) {
      m.times.push_back(t);
      m.cluster_ids.push_back(i);
      for (std::size_t c = 0; c < m.dim; ++c) m.coords.push_back(p * q[j * m.dim + c]);
    }
  }
  return m;
}

PointMeasure restrict_anchors(const PointMeasure& m, double u_prime) {
  if (m.cluster_ids.size() != m.size()) throw ParameterError("restrict_anchors: measure has no anchors");
  PointMeasure out;
  out.dim = m.dim;
  out.norm = m.norm;
  out.floor = u_prime;
  std::vector<std::size_t> relabel(m.anchors.size(), SIZE_MAX);
  for (std::size_t i = 0; i < m.anchors.size(); ++i) {
    if (m.anchors[i] > u_prime) {
      relabel[i] = out.anchors.size();
      out.anchors.push_back(m.anchors[i]);
      out.anchor_times.push_back(m.anchor_times[i]);
    }
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto id = relabel[m.cluster_ids[i]];
    if (id == SIZE_MAX) continue;
    out.times.push_back(m.times[i]);
    out.cluster_ids.push_back(id);
    const auto x = m.x(i);
    out.coords.insert(out.coords.end(), x.begin(), x.end());
  }
  return out;
}

double laplace_weight(const PointMeasure& m, const TestFunctional& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) acc += f(m.times[i], m.norm_at(i));
  return std::exp(-acc);
}

namespace {

// int_0^1 (1 - exp(-x g(t))) dt for the three time weights.
double time_integral(TimeWeight g, double x) {
  if (g == TimeWeight::One) return -std::expm1(-x);
  if (x < 0.5) {
    // sum_k (-1)^{k+1} x^k / (k+1)!; the closed form cancels badly here.
    double term = x / 2.0, acc = 0.0;
    for (int k = 1; k < 30 && std::abs(term) > 1e-18 * std::abs(acc); ++k) {
      acc += term;
      term *= -x / (k + 2);
    }
    return acc;
  }
  return 1.0 + std::expm1(-x) / x;
}

// int int (1 - exp(-sum_j f(t, v Q_j))) alpha v^{-alpha-1} dv dt for one cluster.
double cluster_exponent(const TestFunctional& f, double alpha, const std::vector<double>& radii) {
  if (radii.empty() || f.scale == 0.0) return 0.0;
  auto sum_h = [&](double v) {
    double h = 0.0;
    for (double r : radii) h += f.spatial(v * r);
    return h;
  };
  auto integrand = [&](double w) {
    if (w <= 0.0) w = 1e-300;
    return time_integral(f.time, f.scale * sum_h(std::pow(w, -1.0 / alpha)));
  };
  const double w_max = std::pow(f.level, -alpha);
  std::vector<double> cuts{0.0, w_max};
  for (double r : radii) {
    for (double b : f.breakpoints()) {
      const double w = std::pow(b / r, -alpha);
      if (w > 0.0 && w < w_max) cuts.push_back(w);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], width = cuts[i + 1] - cuts[i];
    if (width <= 0.0) continue;
    // Integrate on [0, 1]: boost compares an unscaled local error against a
    // scaled tolerance, which never converges on very short intervals.
    auto unit = [&](double x) { return integrand(a + width * x); };
    total += width * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(unit, 0.0, 1.0, 15, 1e-11);
  }
  return total;
}

std::vector<double> atom_radii(const QSampler& q, std::span<const double> atom) {
  std::vector<double> radii;
  const std::size_t d = q.dim();
  for (std::size_t j = 0; j < atom.size() / d; ++j) {
    const double r = norm_of(atom.subspan(j * d, d), q.norm());
    if (r > 0.0) radii.push_back(r);
  }
  return radii;
}

}  // namespace

Estimate laplace_closed_form(const LimitSpec& spec, const TestFunctional& f, std::size_t q_reps,
                             std::uint64_t seed) {
  spec.validate();
  f.validate();
  if (f.level < spec.truncation) {
    throw DomainError("laplace_closed_form: functional support floor is below the truncation level");
  }
  if (f.scale == 0.0) return {1.0, 0.0};
  if (q_reps < 1) throw ParameterError("laplace_closed_form: q_reps must be positive");

  if (spec.q.atom_count() <= q_reps) {
    std::vector<double> per_atom(spec.q.atom_count());
    parallel_for(per_atom.size(), [&](std::size_t a) {
      per_atom[a] = spec.theta * cluster_exponent(f, spec.alpha, atom_radii(spec.q, spec.q.atom(a)));
    });
    if (spec.q.empirical()) {
      // Uniform atoms: the enumeration is the sample mean over the clusters.
      const auto est = mean_estimate(per_atom);
      const double value = std::exp(-est.value);
      return {value, value * est.std_error};
    }
    double expo = 0.0;
    for (std::size_t a = 0; a < per_atom.size(); ++a) expo += spec.q.probability(a) * per_atom[a];
    return {std::exp(-expo), 0.0};
  }
  // Many atoms: integrate each distinct drawn cluster once, then average.
  auto eng = make_engine(seed);
  std::vector<std::size_t> draws(q_reps);
  for (auto& i : draws) i = spec.q.draw_index(eng);
  std::map<std::size_t, double> cache;
  for (auto i : draws) cache.emplace(i, 0.0);
  std::vector<std::size_t> keys;
  for (const auto& kv : cache) keys.push_back(kv.first);
  std::vector<double> values(keys.size());
  parallel_for(keys.size(), [&](std::size_t k) {
    values[k] = cluster_exponent(f, spec.alpha, atom_radii(spec.q, spec.q.atom(keys[k])));
  });
  for (std::size_t k = 0; k < keys.size(); ++k) cache[keys[k]] = values[k];
  std::vector<double> samples(q_reps);
  for (std::size_t r = 0; r < q_reps; ++r) samples[r] = spec.theta * cache[draws[r]];
  const auto est = mean_estimate(samples);
  const double value = std::exp(-est.value);
  return {value, value * est.std_error};
}

std::vector<Estimate> laplace_empirical(const std::function<PointMeasure(std::size_t)>& source,
                                        std::span<const TestFunctional> fs, std::size_t reps) {
  if (reps < kMinLaplaceReps) throw ParameterError("laplace_empirical needs at least 1000 replications");
  for (const auto& f : fs) f.validate();
  const std::size_t k = fs.size();
  std::vector<double> weights(reps * k);
  parallel_for(reps, [&](std::size_t rep) {
    const auto m = source(rep);
    for (std::size_t i = 0; i < k; ++i) weights[i * reps + rep] = laplace_weight(m, fs[i]);
  });
  std::vector<Estimate> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = mean_estimate(std::span<const double>(weights.data() + i * reps, reps));
  }
  return out;
}

std::vector<Estimate> laplace_empirical(const LimitSpec& spec, std::span<const TestFunctional> fs,
                                        std::size_t reps, std::uint64_t seed) {
  spec.validate();
  return laplace_empirical([&](std::size_t rep) { return sample_limit(spec, derive_seed(seed, rep)); },
                           fs, reps);
}

std::vector<Estimate> laplace_empirical(const ModelSpec& model, std::size_t n,
                                        std::span<const TestFunctional> fs, std::size_t reps) {
  double floor = 1.0;
  if (!fs.empty()) {
    floor = std::min_element(fs.begin(), fs.end(), [](const auto& a, const auto& b) {
              return a.level < b.level;
            })->level;
  }
  normalizing_constant(model, n);  // warm the cache before fanning out
  return laplace_empirical(
      [&](std::size_t rep) { return point_measure_from_path(generate_replication(model, n, rep), floor); },
      fs, reps);
}

Estimate spectral_functional(const QSampler& q, double theta, double alpha,
                             std::span<const double> t, std::size_t reps, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("spectral functional needs alpha in (0, 2)");
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("spectral functional needs theta in (0, 1]");
  if (t.size() != q.dim()) throw DimensionError("direction t has the wrong dimension");
  if (std::abs(norm_of(t, Norm::Euclidean) - 1.0) > 1e-9) {
    throw ParameterError("direction t must be a Euclidean unit vector");
  }
  if (reps < 1) throw ParameterError("spectral functional: reps must be positive");
  const std::size_t d = q.dim();
  auto term = [&](std::span<const double> atom) {
    double s = 0.0;
    for (std::size_t j = 0; j < atom.size() / d; ++j) {
      for (std::size_t c = 0; c < d; ++c) s += t[c] * atom[j * d + c];
    }
    return s > 0.0 ? std::pow(s, alpha) : 0.0;
  };
  const double prefactor = theta * alpha / (2.0 - alpha);
  if (q.atom_count() <= reps) {
    std::vector<double> per_atom(q.atom_count());
    for (std::size_t a = 0; a < per_atom.size(); ++a) per_atom[a] = term(q.atom(a));
    if (q.empirical()) {
      const auto est = mean_estimate(per_atom);
      return {prefactor * est.value, prefactor * est.std_error};
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < per_atom.size(); ++a) acc += q.probability(a) * per_atom[a];
    return {prefactor * acc, 0.0};
  }
  auto eng = make_engine(seed);
  std::vector<double> samples(reps);
  for (auto& s : samples) s = term(q.draw(eng));
  const auto est = mean_estimate(samples);
  return {prefactor * est.value, prefactor * est.std_error};
}

double cluster_index(double spectral_value, double alpha) {
  if (alpha == 1.0) throw UnsupportedParameterError("cluster index prefactor degenerates at alpha = 1");
  if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("cluster index needs alpha in (0, 2)");
  const double prefactor = (1.0 - alpha) / (std::tgamma(2.0 - alpha) * std::cos(std::numbers::pi * alpha / 2.0));
  return prefactor * spectral_value;
}

RestrictionReport restriction_check(const LimitSpec& spec, double u_prime, std::size_t samples,
                                    std::uint64_t seed) {
  spec.validate();
  if (!(u_prime > spec.truncation)) throw ParameterError("restriction_check needs u' > u");
  LimitSpec direct = spec;
  direct.truncation = u_prime;
  std::vector<std::vector<double>> restricted(samples), fresh(samples);
  parallel_for(samples, [&](std::size_t i) {
    restricted[i] = restrict_anchors(sample_limit(spec, derive_seed(seed, 2 * i)), u_prime).anchors;
    fresh[i] = sample_limit(direct, derive_seed(seed, 2 * i + 1)).anchors;
  });
  std::vector<double> a, b;
  for (const auto& v : restricted) a.insert(a.end(), v.begin(), v.end());
  for (const auto& v : fresh) b.insert(b.end(), v.begin(), v.end());
  RestrictionReport out;
  out.restricted_count = a.size();
  out.direct_count = b.size();
  if (a.empty() || b.empty()) throw InsufficientDataError("restriction_check: no anchors above u'", 0);
  out.anchors = stats::ks_two_sample(a, b);
  // Two independent Poisson totals with equal means: given their sum N, the
  // first is Binomial(N, 1/2).
  const auto total = static_cast<double>(a.size() + b.size());
  boost::math::binomial_distribution<double> bin(total, 0.5);
  const auto k = static_cast<double>(a.size());
  const double lower = boost::math::cdf(bin, k);
  const double upper = k > 0 ? boost::math::cdf(boost::math::complement(bin, k - 1.0)) : 1.0;
  out.count_p_value = std::min(1.0, 2.0 * std::min(lower, upper));
  return out;
}

void write_point_measures(std::ostream& os, std::span<const PointMeasure> measures) {
  for (std::size_t s = 0; s < measures.size(); ++s) {
    const auto& m = measures[s];
    os << json{{"sample", s}, {"points", m.size()}, {"floor", m.floor}}.dump() << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto x = m.x(i);
      json rec = {{"sample", s}, {"t", m.times[i]}, {"x", std::vector<double>(x.begin(), x.end())}};
      if (m.cluster_ids.size() == m.size()) rec["cluster"] = m.cluster_ids[i];
      os << rec.dump() << '\n';
    }
  }
}

std::vector<PointMeasure> read_point_measures(std::istream& is, std::size_t dim, Norm norm) {
  std::vector<PointMeasure> out;
  std::vector<std::size_t> expected;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      const auto rec = json::parse(line);
      if (rec.contains("points")) {
        PointMeasure m;
        m.dim = dim;
        m.norm = norm;
        m.floor = rec.at("floor").get<double>();
        out.push_back(std::move(m));
        expected.push_back(rec.at("points").get<std::size_t>());
        continue;
      }
      if (out.empty()) throw IoError("point record before its sample header");
      auto& m = out.back();
      const auto x = rec.at("x").get<std::vector<double>>();
      if (x.size() != dim) throw DimensionError("point record has the wrong dimension");
      m.times.push_back(rec.at("t").get<double>());
      m.coords.insert(m.coords.end(), x.begin(), x.end());
      if (rec.contains("cluster")) m.cluster_ids.push_back(rec["cluster"].get<std::size_t>());
    } catch (const json::exception& e) {
      throw IoError(std::string("malformed point record: ") + e.what());
    }
  }
  for (std::size_t s = 0; s < out.size(); ++s) {
    if (out[s].size() != expected[s]) throw IoError("point measure record count mismatch");
  }
  return out;
}

std::string laplace_record(const TestFunctional& f, const Estimate& e) {
  return json{{"functional", f.id()}, {"value", e.value}, {"stderr", e.std_error}}.dump();
}

}  // namespace xclust
