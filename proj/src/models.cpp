#include "xclust/models.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "xclust/random.hpp"

namespace xclust {

namespace {

constexpr std::uint64_t kPilotSeed = 0x7a11'c0de'5eedULL;
constexpr std::size_t kPilotDraws = 1'000'000;
// Draws used by the conditional (sum-of-heavy-tails) pilot estimator for ar1.
constexpr std::size_t kConditionalPilotDraws = 100'000;

bool is_moving_max(const ModelSpec& s) {
  return s.kind == ModelKind::MovingMaximum || s.kind == ModelKind::MmMultivariate;
}

std::size_t mm_order(const ModelSpec& s) {
  std::size_t len = 0;
  for (const auto& row : s.coefficients) len = std::max(len, row.size());
  return len == 0 ? 0 : len - 1;
}

double coefficient(const ModelSpec& s, std::size_t k, std::size_t j) {
  const auto& row = s.coefficients[k];
  return j < row.size() ? row[j] : 0.0;
}

// Coefficients whose scaled innovations make up ||X_t|| under the sup norm.
std::vector<double> sup_norm_coefficients(const ModelSpec& s) {
  const std::size_t m = mm_order(s);
  std::vector<double> out;
  if (s.common_shock) {
    for (std::size_t j = 0; j <= m; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < s.coefficients.size(); ++k) c = std::max(c, coefficient(s, k, j));
      out.push_back(c);
    }
  } else {
    for (const auto& row : s.coefficients) out.insert(out.end(), row.begin(), row.end());
  }
  std::erase_if(out, [](double c) { return c <= 0.0; });
  return out;
}

double inv_pow(double y, double alpha) {
  if (alpha == 1.0) return 1.0 / y;
  return std::pow(y, -alpha);
}

std::size_t ar1_truncation(double phi) {
  if (phi <= 0.0) return 1;
  const double j = std::ceil(std::log(1e-12) / std::log(phi));
  return static_cast<std::size_t>(std::clamp(j, 1.0, 10000.0));
}

// Conditional Monte Carlo estimate of P(sum_j phi^j Z_j > x) for nonnegative
// Pareto innovations: sum over j of P(Y_j > max(M_{-j}, x - S_{-j}) | rest),
// which has bounded relative error for heavy-tailed summands. Common random
// numbers (fixed seed) make it a deterministic, nonincreasing function of x.
double ar1_conditional_tail(const ModelSpec& s, double x, std::uint64_t seed,
                            std::size_t draws) {
  const std::size_t terms = ar1_truncation(s.phi);
  std::vector<double> scale(terms), y(terms);
  scale[0] = 1.0;
  for (std::size_t j = 1; j < terms; ++j) scale[j] = scale[j - 1] * s.phi;
  auto eng = make_engine(seed);
  double acc = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    double sum = 0.0, top = 0.0, second = 0.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < terms; ++j) {
      y[j] = scale[j] * pareto(eng, s.alpha);
      sum += y[j];
      if (y[j] > top) {
        second = top;
        top = y[j];
        arg = j;
      } else if (y[j] > second) {
        second = y[j];
      }
    }
    double est = 0.0;
    for (std::size_t j = 0; j < terms; ++j) {
      const double others_max = (j == arg) ? second : top;
      const double level = std::max(others_max, x - (sum - y[j]));
      est += level <= scale[j] ? 1.0 : inv_pow(level / scale[j], s.alpha);
    }
    acc += est;
  }
  return acc / static_cast<double>(draws);
}

double ar1_conditional_constant(const ModelSpec& s, std::size_t n, std::uint64_t seed) {
  const double nd = static_cast<double>(n);
  const std::size_t draws = kConditionalPilotDraws;
  auto excess = [&](double log_x) {
    return std::log(nd * ar1_conditional_tail(s, std::exp(log_x), seed, draws));
  };
  const double guess = std::pow(nd / (1.0 - std::pow(s.phi, s.alpha)), 1.0 / s.alpha);
  double lo = std::log(guess) - 0.5, hi = std::log(guess) + 0.5;
  double flo = excess(lo), fhi = excess(hi);
  for (int i = 0; i < 60 && flo < 0.0; ++i) {
    hi = lo;
    fhi = flo;
    lo -= 1.0;
    flo = excess(lo);
  }
  for (int i = 0; i < 60 && fhi > 0.0; ++i) {
    lo = hi;
    flo = fhi;
    hi += 1.0;
    fhi = excess(hi);
  }
  std::uintmax_t iters = 100;
  auto [a, b] = boost::math::tools::toms748_solve(excess, lo, hi, flo, fhi,
                                                  boost::math::tools::eps_tolerance<double>(45),
                                                  iters);
  return std::exp(0.5 * (a + b));
}

// Closed-form normalizing constants, nullopt when none is available.
std::optional<double> analytic_constant(const ModelSpec& s, std::size_t n) {
  const double nd = static_cast<double>(n);
  if (s.dim > 1 && s.norm != Norm::Sup) return std::nullopt;
  if (s.kind == ModelKind::IidPareto) {
    if (s.dim == 1) return std::pow(nd, 1.0 / s.alpha);
    // (1 - x^{-alpha})^d = 1 - 1/n
    const double tail = -std::expm1(std::log1p(-1.0 / nd) / static_cast<double>(s.dim));
    return std::pow(tail, -1.0 / s.alpha);
  }
  if (is_moving_max(s)) {
    const auto cs = sup_norm_coefficients(s);
    const double cmax = *std::max_element(cs.begin(), cs.end());
    double csum = 0.0;
    for (double c : cs) csum += std::pow(c, s.alpha);
    auto excess = [&](double x) { return nd * *exact_marginal_tail(s, x) - 1.0; };
    const double lo = cmax;
    const double hi = 2.0 * std::pow(nd * csum, 1.0 / s.alpha) + cmax;
    const double flo = excess(lo);
    if (flo <= 0.0) return lo;
    std::uintmax_t iters = 200;
    auto [a, b] = boost::math::tools::toms748_solve(
        excess, lo, hi, flo, excess(hi), boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (a + b);
  }
  return std::nullopt;
}

// Raw stationary values X_1..X_n (row-major), without the normalizing constant.
std::vector<double> simulate(const ModelSpec& spec, std::size_t n) {
  std::vector<double> values(n * spec.dim);
  auto eng = make_engine(spec.seed);

  switch (spec.kind) {
    case ModelKind::IidPareto:
      for (double& v : values) v = signed_pareto(eng, spec.alpha, spec.sign_weight);
      break;
    case ModelKind::Ar1: {
      double x = signed_pareto(eng, spec.alpha, spec.sign_weight);
      for (std::size_t w = 0; w < spec.warm_up(); ++w) {
        x = spec.phi * x + signed_pareto(eng, spec.alpha, spec.sign_weight);
      }
      for (std::size_t t = 0; t < n; ++t) {
        x = spec.phi * x + signed_pareto(eng, spec.alpha, spec.sign_weight);
        values[t] = x;
      }
      break;
    }
    case ModelKind::MovingMaximum:
    case ModelKind::MmMultivariate: {
      const std::size_t m = mm_order(spec);
      const std::size_t d = spec.dim;
      const std::size_t streams = spec.common_shock ? 1 : d;
      std::vector<double> z((n + m) * streams);
      for (double& v : z) v = pareto(eng, spec.alpha);
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t k = 0; k < d; ++k) {
          const std::size_t stream = spec.common_shock ? 0 : k;
          double x = 0.0;
          for (std::size_t j = 0; j <= m; ++j) {
            x = std::max(x, coefficient(spec, k, j) * z[(t + m - j) * streams + stream]);
          }
          values[t * d + k] = x;
        }
      }
      break;
    }
  }
  return values;
}

std::string cache_key(const ModelSpec& s, std::size_t n) {
  return s.describe() + "|n=" + std::to_string(n);
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::IidPareto: return "iid-pareto";
    case ModelKind::MovingMaximum: return "moving-maximum";
    case ModelKind::Ar1: return "ar1";
    case ModelKind::MmMultivariate: return "mm-multivariate";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "iid-pareto") return ModelKind::IidPareto;
  if (name == "moving-maximum") return ModelKind::MovingMaximum;
  if (name == "ar1") return ModelKind::Ar1;
  if (name == "mm-multivariate") return ModelKind::MmMultivariate;
  throw ParameterError("unknown model kind '" + name + "'");
}

ModelSpec ModelSpec::iid(double alpha, double p, std::size_t dim) {
  ModelSpec s;
  s.kind = ModelKind::IidPareto;
  s.alpha = alpha;
  s.sign_weight = p;
  s.dim = dim;
  return s;
}

ModelSpec ModelSpec::moving_maximum(double alpha, std::vector<double> c) {
  ModelSpec s;
  s.kind = ModelKind::MovingMaximum;
  s.alpha = alpha;
  s.coefficients = {std::move(c)};
  return s;
}

ModelSpec ModelSpec::ar1(double alpha, double phi, double p) {
  ModelSpec s;
  s.kind = ModelKind::Ar1;
  s.alpha = alpha;
  s.phi = phi;
  s.sign_weight = p;
  return s;
}

ModelSpec ModelSpec::mm_multivariate(double alpha, std::vector<std::vector<double>> c,
                                     bool common_shock) {
  ModelSpec s;
  s.kind = ModelKind::MmMultivariate;
  s.alpha = alpha;
  s.dim = c.size();
  s.coefficients = std::move(c);
  s.common_shock = common_shock;
  return s;
}

void ModelSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be positive");
  if (dim < 1) throw ParameterError("dimension must be at least 1");
  switch (kind) {
    case ModelKind::IidPareto:
    case ModelKind::Ar1:
      if (!(sign_weight > 0.0 && sign_weight <= 1.0)) {
        throw ParameterError("positive-tail weight p must lie in (0, 1]");
      }
      if (kind == ModelKind::Ar1) {
        if (!(phi >= 0.0 && phi < 1.0)) throw ParameterError("ar1 requires phi in [0, 1)");
        if (dim != 1) throw ParameterError("ar1 is univariate");
      }
      break;
    case ModelKind::MovingMaximum:
    case ModelKind::MmMultivariate: {
      if (sign_weight != 1.0) throw ParameterError("moving-maximum models are nonnegative");
      if (coefficients.empty()) throw ParameterError("moving-maximum needs coefficients");
      if (kind == ModelKind::MovingMaximum && (coefficients.size() != 1 || dim != 1)) {
        throw ParameterError("moving-maximum takes a single coefficient vector and d = 1");
      }
      if (kind == ModelKind::MmMultivariate && coefficients.size() != dim) {
        throw ParameterError("mm-multivariate needs one coefficient row per coordinate");
      }
      bool positive = false;
      for (const auto& row : coefficients) {
        if (row.empty()) throw ParameterError("empty coefficient row");
        for (double c : row) {
          if (!(c >= 0.0) || !std::isfinite(c)) {
            throw ParameterError("moving-maximum coefficients must be nonnegative");
          }
          positive = positive || c > 0.0;
        }
      }
      if (!positive) throw ParameterError("moving-maximum needs at least one c_j > 0");
      break;
    }
  }
}

std::size_t ModelSpec::warm_up() const {
  switch (kind) {
    case ModelKind::IidPareto: return 0;
    case ModelKind::MovingMaximum:
    case ModelKind::MmMultivariate: return mm_order(*this);
    case ModelKind::Ar1: return static_cast<std::size_t>(std::ceil(50.0 / (1.0 - phi)));
  }
  return 0;
}

std::optional<std::size_t> ModelSpec::dependence_window() const {
  switch (kind) {
    case ModelKind::IidPareto: return 0;
    case ModelKind::MovingMaximum:
    case ModelKind::MmMultivariate: return mm_order(*this);
    case ModelKind::Ar1:
      if (phi == 0.0) return 0;
      return std::nullopt;
  }
  return std::nullopt;
}

std::string ModelSpec::describe() const {
  std::ostringstream os;
  os << std::setprecision(17) << to_string(kind) << "(alpha=" << alpha << ",d=" << dim;
  switch (kind) {
    case ModelKind::IidPareto: os << ",p=" << sign_weight; break;
    case ModelKind::Ar1: os << ",phi=" << phi << ",p=" << sign_weight; break;
    case ModelKind::MovingMaximum:
    case ModelKind::MmMultivariate:
      os << ",c=[";
      for (std::size_t k = 0; k < coefficients.size(); ++k) {
        if (k) os << ';';
        for (std::size_t j = 0; j < coefficients[k].size(); ++j) {
          if (j) os << ',';
          os << coefficients[k][j];
        }
      }
      os << ']';
      if (kind == ModelKind::MmMultivariate) os << ",shock=" << (common_shock ? "common" : "independent");
      break;
  }
  os << ",norm=" << (norm == Norm::Sup ? "sup" : "euclidean") << ')';
  return os.str();
}

SeriesPath generate(const ModelSpec& spec, std::size_t n) {
  spec.validate();
  if (n < 1) throw ParameterError("path length must be at least 1");
  SeriesPath path;
  path.n = n;
  path.dim = spec.dim;
  path.model = spec;
  path.a_n = normalizing_constant(spec, n);
  path.values = simulate(spec, n);
  return path;
}

SeriesPath generate_replication(const ModelSpec& spec, std::size_t n, std::uint64_t rep) {
  return generate(spec.with_seed(derive_seed(spec.seed, rep)), n);
}

std::optional<double> exact_marginal_tail(const ModelSpec& s, double x) {
  if (s.dim > 1 && s.norm != Norm::Sup) return std::nullopt;
  if (s.kind == ModelKind::IidPareto) {
    if (x < 1.0) return 1.0;
    const double single = inv_pow(x, s.alpha);
    return -std::expm1(static_cast<double>(s.dim) * std::log1p(-single));
  }
  if (is_moving_max(s)) {
    double log_cdf = 0.0;
    for (double c : sup_norm_coefficients(s)) {
      if (x <= c) return 1.0;
      log_cdf += std::log1p(-inv_pow(x / c, s.alpha));
    }
    return -std::expm1(log_cdf);
  }
  return std::nullopt;
}

double pilot_quantile(const ModelSpec& spec, std::size_t n, std::uint64_t pilot_seed,
                      std::size_t draws) {
  if (n < 1) throw ParameterError("n must be at least 1");
  spec.validate();
  const auto values = simulate(spec.with_seed(pilot_seed), draws);
  std::vector<double> norms(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    norms[i] = norm_of(std::span<const double>(values.data() + i * spec.dim, spec.dim), spec.norm);
  }
  const double level = 1.0 - 1.0 / static_cast<double>(n);
  auto idx = static_cast<std::size_t>(std::ceil(level * static_cast<double>(draws)));
  idx = std::clamp<std::size_t>(idx, 1, draws) - 1;
  std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(idx), norms.end());
  return norms[idx];
}

double normalizing_constant(const ModelSpec& spec, std::size_t n, std::uint64_t pilot_seed) {
  spec.validate();
  if (n < 1) throw ParameterError("n must be at least 1");
  if (auto a = analytic_constant(spec, n)) return *a;
  if (spec.kind == ModelKind::Ar1 && spec.sign_weight == 1.0 && n > 1) {
    return ar1_conditional_constant(spec, n, pilot_seed);
  }
  return pilot_quantile(spec, n, pilot_seed, kPilotDraws);
}

double normalizing_constant(const ModelSpec& spec, std::size_t n) {
  spec.validate();
  if (auto a = analytic_constant(spec, n)) return *a;
  static std::mutex mutex;
  static std::map<std::string, double> cache;
  const auto key = cache_key(spec, n);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double a = normalizing_constant(spec, n, kPilotSeed);
  std::lock_guard lock(mutex);
  cache.emplace(key, a);
  return a;
}

std::optional<double> theoretical_theta(const ModelSpec& s) {
  s.validate();
  switch (s.kind) {
    case ModelKind::IidPareto: return 1.0;
    case ModelKind::Ar1:
      if (s.sign_weight == 1.0) return 1.0 - std::pow(s.phi, s.alpha);
      return std::nullopt;
    case ModelKind::MovingMaximum:
    case ModelKind::MmMultivariate: {
      if (s.dim > 1 && s.norm != Norm::Sup) return std::nullopt;
      if (s.common_shock || s.dim == 1) {
        const auto cs = sup_norm_coefficients(s);
        double top = 0.0, sum = 0.0;
        for (double c : cs) {
          const double w = std::pow(c, s.alpha);
          top = std::max(top, w);
          sum += w;
        }
        return top / sum;
      }
      // Independent coordinates: each coordinate's clusters are disjoint in
      // time, so theta = sum_k max_j c_kj^a / sum_kj c_kj^a.
      double top = 0.0, sum = 0.0;
      for (const auto& row : s.coefficients) {
        double row_top = 0.0;
        for (double c : row) {
          const double w = std::pow(c, s.alpha);
          row_top = std::max(row_top, w);
          sum += w;
        }
        top += row_top;
      }
      return top / sum;
    }
  }
  return std::nullopt;
}

}  // namespace xclust
