#include "xclust/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "xclust/random.hpp"

namespace xclust::stats {

namespace {

KsReport make_report(double statistic, std::size_t n, double n_eff) {
  KsReport r;
  r.statistic = std::clamp(statistic, 0.0, 1.0);
  r.sample_size = n;
  r.critical_5 = 1.36 / std::sqrt(n_eff);
  r.critical_1 = 1.63 / std::sqrt(n_eff);
  return r;
}

// Row sums sum_j |x_i - x_j| for every i, via one sort and prefix sums.
std::vector<double> distance_row_sums(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  std::vector<double> sums(n);
  double prefix = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = x[order[k]];
    const double below = v * static_cast<double>(k) - prefix;
    const double above = (total - prefix - v) - v * static_cast<double>(n - 1 - k);
    sums[order[k]] = below + above;
    prefix += v;
  }
  return sums;
}

// Fenwick tree carrying (count, sum x, sum y, sum xy) per y-rank.
class PairTree {
 public:
  explicit PairTree(std::size_t size) : nodes_(size + 1) {}

  struct Sums {
    double count = 0.0, sx = 0.0, sy = 0.0, sxy = 0.0;
    Sums& operator+=(const Sums& o) {
      count += o.count;
      sx += o.sx;
      sy += o.sy;
      sxy += o.sxy;
      return *this;
    }
  };

  void add(std::size_t rank, double x, double y) {
    for (std::size_t i = rank + 1; i < nodes_.size(); i += i & (~i + 1)) {
      nodes_[i] += Sums{1.0, x, y, x * y};
    }
  }

  // Sums over ranks [0, rank].
  Sums prefix(std::size_t rank) const {
    Sums s;
    for (std::size_t i = rank + 1; i > 0; i -= i & (~i + 1)) s += nodes_[i];
    return s;
  }

 private:
  std::vector<Sums> nodes_;
};

// sum_{i,j} |x_i - x_j| |y_i - y_j| in O(n log n). For j preceding i in
// x-order the product equals +(dx)(dy) when y_j <= y_i and -(dx)(dy) otherwise.
double cross_distance_sum(std::span<const double> x, std::span<const double> y,
                          std::span<const std::size_t> x_order,
                          std::span<const std::size_t> y_rank, std::size_t rank_count) {
  PairTree tree(rank_count);
  PairTree::Sums total;
  double acc = 0.0;
  for (std::size_t i : x_order) {
    const double xi = x[i];
    const double yi = y[i];
    const auto below = tree.prefix(y_rank[i]);
    PairTree::Sums above{total.count - below.count, total.sx - below.sx, total.sy - below.sy,
                         total.sxy - below.sxy};
    const double s_below = below.count * xi * yi - xi * below.sy - yi * below.sx + below.sxy;
    const double s_above = above.count * xi * yi - xi * above.sy - yi * above.sx + above.sxy;
    acc += s_below - s_above;
    tree.add(y_rank[i], xi, yi);
    total += PairTree::Sums{1.0, xi, yi, xi * yi};
  }
  return 2.0 * acc;
}

// Squared distance variance of a single sample (V-statistic).
double distance_variance_sq(std::span<const double> x, std::span<const double> row_sums) {
  const double n = static_cast<double>(x.size());
  double sum = 0.0, sum_sq = 0.0;
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
  }
  const double pair_sq = 2.0 * n * sum_sq - 2.0 * sum * sum;
  double rows_sq = 0.0, grand = 0.0;
  for (double a : row_sums) {
    rows_sq += a * a;
    grand += a;
  }
  return pair_sq / (n * n) - 2.0 * rows_sq / (n * n * n) + grand * grand / (n * n * n * n);
}

std::vector<double> centered(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  if (out.empty()) return out;
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
  for (double& e : out) e -= mean;
  return out;
}

struct DcorWorkspace {
  std::vector<double> x, y;
  std::vector<double> a_rows, b_rows;
  std::vector<std::size_t> x_order;
  double var_x = 0.0, var_y = 0.0, grand_a = 0.0, grand_b = 0.0;

  DcorWorkspace(std::span<const double> xs, std::span<const double> ys)
      : x(centered(xs)), y(centered(ys)) {
    a_rows = distance_row_sums(x);
    b_rows = distance_row_sums(y);
    var_x = distance_variance_sq(x, a_rows);
    var_y = distance_variance_sq(y, b_rows);
    grand_a = std::accumulate(a_rows.begin(), a_rows.end(), 0.0);
    grand_b = std::accumulate(b_rows.begin(), b_rows.end(), 0.0);
    x_order.resize(x.size());
    std::iota(x_order.begin(), x_order.end(), std::size_t{0});
    std::sort(x_order.begin(), x_order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
  }

  bool degenerate() const { return var_x <= 0.0 || var_y <= 0.0; }

  // dCor of x against y permuted by perm (y_perm[i] = y[perm[i]]).
  double dcor(std::span<const std::size_t> perm) const {
    const std::size_t n = x.size();
    std::vector<double> yp(n), bp(n);
    for (std::size_t i = 0; i < n; ++i) {
      yp[i] = y[perm[i]];
      bp[i] = b_rows[perm[i]];
    }
    std::vector<std::size_t> by_y(n);
    std::iota(by_y.begin(), by_y.end(), std::size_t{0});
    std::sort(by_y.begin(), by_y.end(), [&](auto i, auto j) { return yp[i] < yp[j]; });
    std::vector<std::size_t> rank(n);
    std::size_t r = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0 && yp[by_y[k]] != yp[by_y[k - 1]]) ++r;
      rank[by_y[k]] = r;
    }
    const double s1 = cross_distance_sum(x, yp, x_order, rank, r + 1);
    double rows = 0.0;
    for (std::size_t i = 0; i < n; ++i) rows += a_rows[i] * bp[i];
    const double nd = static_cast<double>(n);
    const double cov_sq = s1 / (nd * nd) - 2.0 * rows / (nd * nd * nd) +
                          grand_a * grand_b / (nd * nd * nd * nd);
    const double r2 = cov_sq / std::sqrt(var_x * var_y);
    return std::sqrt(std::max(r2, 0.0));
  }
};

}  // namespace

KsReport ks_test(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw ParameterError("ks_test: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return make_report(d, sorted.size(), n);
}

KsReport ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return make_report(d, sa.size() + sb.size(), na * nb / (na + nb));
}

std::size_t default_hill_k(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 0.6)));
}

HillEstimate hill_estimator(std::span<const double> sample, std::size_t k) {
  if (k == 0 || k >= sample.size()) {
    throw ParameterError("hill_estimator: need 0 < k < sample size");
  }
  for (double v : sample) {
    if (!(v > 0.0)) throw DomainError("hill_estimator: sample must be positive");
  }
  std::vector<double> top(sample.begin(), sample.end());
  std::nth_element(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(k), top.end(),
                   std::greater<>());
  const double anchor = top[k];
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(top[i] / anchor);
  if (!(sum > 0.0)) {
    throw DomainError("hill_estimator: top order statistics are tied (zero log-spacing)");
  }
  HillEstimate est;
  est.k = k;
  est.alpha = static_cast<double>(k) / sum;
  est.std_error = est.alpha / std::sqrt(static_cast<double>(k));
  return est;
}

HillEstimate hill_estimator(std::span<const double> sample) {
  return hill_estimator(sample, default_hill_k(sample.size()));
}

double distance_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ParameterError("distance_correlation: length mismatch");
  if (x.size() < 2) throw ParameterError("distance_correlation: need at least two points");
  DcorWorkspace ws(x, y);
  if (ws.degenerate()) return 0.0;
  std::vector<std::size_t> identity(x.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  return ws.dcor(identity);
}

DcorResult distance_correlation_test(std::span<const double> x, std::span<const double> y,
                                     std::size_t permutations, std::uint64_t seed) {
  if (x.size() != y.size()) throw ParameterError("distance_correlation: length mismatch");
  if (x.size() < 50) {
    throw ParameterError("distance_correlation_test: need at least 50 paired observations");
  }
  DcorResult result;
  result.permutations = permutations;
  DcorWorkspace ws(x, y);
  if (ws.degenerate()) {
    result.statistic = 0.0;
    result.p_value = 1.0;
    return result;
  }
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  result.statistic = ws.dcor(perm);

  auto eng = make_engine(seed);
  std::size_t at_least = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(uniform01(eng) * static_cast<double>(i + 1));
      std::swap(perm[i], perm[std::min(j, i)]);
    }
    if (ws.dcor(perm) >= result.statistic) ++at_least;
  }
  result.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
  return result;
}

}  // namespace xclust::stats
