#include "xclust/extremal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

namespace xclust {

using nlohmann::json;

StepPath StepPath::constant(double level) {
  StepPath p;
  p.levels = {level};
  return p;
}

StepPath StepPath::make(std::vector<double> times, std::vector<double> levels, bool raw) {
  if (levels.size() != times.size() + 1) throw ParameterError("step path needs one more level than jumps");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0 && times[i] <= 1.0)) throw ParameterError("step path jump time outside [0, 1]");
    if (i > 0 && !(times[i] >= times[i - 1])) throw ParameterError("step path jump times must be sorted");
  }
  StepPath p;
  p.raw = raw;
  p.levels = {levels[0]};
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double v = levels[i + 1];
    if (times[i] == 0.0) {
      p.levels.back() = v;  // the initial interval is empty
      continue;
    }
    if (!p.times.empty() && p.times.back() == times[i]) {
      p.levels.back() = v;
      continue;
    }
    if (v == p.levels.back()) continue;
    p.times.push_back(times[i]);
    p.levels.push_back(v);
  }
  // Merging equal-time jumps can leave repeated levels behind.
  StepPath out;
  out.raw = raw;
  out.levels = {p.levels[0]};
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    if (p.levels[i + 1] == out.levels.back()) continue;
    out.times.push_back(p.times[i]);
    out.levels.push_back(p.levels[i + 1]);
  }
  return out;
}

double StepPath::operator()(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return levels[static_cast<std::size_t>(it - times.begin())];
}

bool StepPath::nondecreasing() const {
  return std::is_sorted(levels.begin(), levels.end());
}

StepPath StepPath::clamped() const {
  std::vector<double> lv(levels);
  for (double& v : lv) v = std::max(v, 0.0);
  return make(times, std::move(lv), false);
}

StepPath maximal_path(const SeriesPath& path) {
  if (path.dim != 1) throw DimensionError("maximal_path needs a univariate path");
  if (path.n == 0) throw ParameterError("maximal_path: empty path");
  const double nd = static_cast<double>(path.n);
  std::vector<double> times, levels;
  double running = path.values[0] / path.a_n;
  levels.push_back(running);
  for (std::size_t k = 2; k <= path.n; ++k) {
    const double x = path.values[k - 1] / path.a_n;
    if (x > running) {
      running = x;
      times.push_back(static_cast<double>(k) / nd);
      levels.push_back(running);
    }
  }
  const bool raw = levels.front() < 0.0;
  return StepPath::make(std::move(times), std::move(levels), raw);
}

StepPath t_plus(const PointMeasure& m) {
  if (m.dim != 1) throw DimensionError("t_plus needs a univariate measure");
  std::vector<std::size_t> order(m.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return m.times[a] < m.times[b]; });
  std::vector<double> times, levels{0.0};
  double running = 0.0;
  for (auto i : order) {
    const double x = m.coords[i];
    if (x > running) {
      running = x;
      times.push_back(m.times[i]);
      levels.push_back(running);
    }
  }
  return StepPath::make(std::move(times), std::move(levels));
}

double uniform_distance(const StepPath& f, const StepPath& g) {
  double d = std::abs(f(0.0) - g(0.0));
  for (double t : f.times) d = std::max(d, std::abs(f(t) - g(t)));
  for (double t : g.times) d = std::max(d, std::abs(f(t) - g(t)));
  return d;
}

namespace {

struct Point2 {
  double t, v;
};

double sup_dist(const Point2& a, const Point2& b) {
  return std::max(std::abs(a.t - b.t), std::abs(a.v - b.v));
}

// Discrete Frechet distance with O(m) memory.
double discrete_frechet(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  const std::size_t m = b.size();
  std::vector<double> prev(m), cur(m);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = sup_dist(a[i], b[j]);
      double best;
      if (i == 0 && j == 0) best = 0.0;
      else if (i == 0) best = cur[j - 1];
      else if (j == 0) best = prev[0];
      else best = std::min({prev[j], prev[j - 1], cur[j - 1]});
      cur[j] = std::max(best, d);
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

// Vertices of the completed graph: horizontal runs joined by vertical jumps.
std::vector<Point2> graph_vertices(const StepPath& p) {
  std::vector<Point2> out{{0.0, p.levels[0]}};
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    out.push_back({p.times[i], p.levels[i]});
    out.push_back({p.times[i], p.levels[i + 1]});
  }
  out.push_back({1.0, p.levels.back()});
  return out;
}

double arc_length(const std::vector<Point2>& vs) {
  double len = 0.0;
  for (std::size_t i = 1; i < vs.size(); ++i) {
    len += std::abs(vs[i].t - vs[i - 1].t) + std::abs(vs[i].v - vs[i - 1].v);
  }
  return len;
}

std::vector<Point2> sample_graph(const std::vector<Point2>& vs, std::size_t grid) {
  const double total = arc_length(vs);
  std::vector<Point2> out;
  out.reserve(vs.size() + grid + 1);
  std::size_t next = 1;  // next grid index to place
  double start = 0.0;    // arc length at vs[i - 1]
  out.push_back(vs[0]);
  for (std::size_t i = 1; i < vs.size(); ++i) {
    const double seg = std::abs(vs[i].t - vs[i - 1].t) + std::abs(vs[i].v - vs[i - 1].v);
    const double end = start + seg;
    while (next < grid && total > 0.0) {
      const double s = total * static_cast<double>(next) / static_cast<double>(grid);
      if (s >= end) break;
      const double w = seg > 0.0 ? (s - start) / seg : 0.0;
      out.push_back({vs[i - 1].t + w * (vs[i].t - vs[i - 1].t), vs[i - 1].v + w * (vs[i].v - vs[i - 1].v)});
      ++next;
    }
    out.push_back(vs[i]);
    start = end;
  }
  return out;
}

StepPath monotone_input(const StepPath& p) {
  if (p.raw) return p.clamped();
  if (!p.nondecreasing()) throw DomainError("M1 distance needs nondecreasing step paths");
  return p;
}

}  // namespace

double m1_distance(const StepPath& f, const StepPath& g, std::size_t grid) {
  if (grid < 1) throw ParameterError("m1_distance: grid must be positive");
  const auto a = sample_graph(graph_vertices(monotone_input(f)), grid);
  const auto b = sample_graph(graph_vertices(monotone_input(g)), grid);
  return discrete_frechet(a, b);
}

double m1_grid_tolerance(const StepPath& f, const StepPath& g, std::size_t grid) {
  const double lf = arc_length(graph_vertices(monotone_input(f)));
  const double lg = arc_length(graph_vertices(monotone_input(g)));
  return std::max(lf, lg) / static_cast<double>(grid);
}

double j1_distance(const StepPath& f, const StepPath& g, std::size_t grid) {
  if (grid < 1) throw ParameterError("j1_distance: grid must be positive");
  std::vector<double> ts{0.0, 1.0};
  for (std::size_t i = 1; i < grid; ++i) ts.push_back(static_cast<double>(i) / static_cast<double>(grid));
  ts.insert(ts.end(), f.times.begin(), f.times.end());
  ts.insert(ts.end(), g.times.begin(), g.times.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<Point2> a, b;
  for (double t : ts) {
    a.push_back({t, f(t)});
    b.push_back({t, g(t)});
  }
  return discrete_frechet(a, b);
}

void ExtremalLaw::validate() const {
  if (!(kappa > 0.0)) throw ParameterError("extremal law: kappa must be positive");
  if (!(alpha > 0.0)) throw ParameterError("extremal law: alpha must be positive");
}

double ExtremalLaw::cdf(double x, double s) const {
  if (!(x > 0.0)) return 0.0;
  return std::exp(-s * kappa * std::pow(x, -alpha));
}

double ExtremalLaw::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("extremal law quantile needs p in (0, 1)");
  return std::pow(-std::log(p) / kappa, -1.0 / alpha);
}

Estimate kappa(double theta, double alpha, const QSampler& q, std::size_t reps, std::uint64_t seed) {
  if (q.dim() != 1) throw DimensionError("kappa needs a univariate Q sampler");
  if (!(alpha > 0.0)) throw ParameterError("kappa: alpha must be positive");
  if (reps < 1) throw ParameterError("kappa: reps must be positive");
  auto term = [&](std::span<const double> atom) {
    const double u = std::max(0.0, *std::max_element(atom.begin(), atom.end()));
    return std::pow(u, alpha);
  };
  if (q.atom_count() <= reps) {
    std::vector<double> per_atom(q.atom_count());
    for (std::size_t a = 0; a < per_atom.size(); ++a) per_atom[a] = term(q.atom(a));
    if (q.empirical()) {
      const auto est = mean_estimate(per_atom);
      return {theta * est.value, theta * est.std_error};
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < per_atom.size(); ++a) acc += q.probability(a) * per_atom[a];
    return {theta * acc, 0.0};
  }
  auto eng = make_engine(seed);
  std::vector<double> samples(reps);
  for (auto& s : samples) s = term(q.draw(eng));
  const auto est = mean_estimate(samples);
  return {theta * est.value, theta * est.std_error};
}

double extremal_joint_cdf(const ExtremalLaw& law, std::span<const double> times,
                          std::span<const double> x) {
  if (times.size() != x.size()) throw DimensionError("extremal_joint_cdf: one level per time");
  double log_p = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double m = *std::min_element(x.begin() + static_cast<std::ptrdiff_t>(i), x.end());
    if (!(m > 0.0)) return 0.0;
    log_p -= (times[i] - prev) * law.kappa * std::pow(m, -law.alpha);
    prev = times[i];
  }
  return std::exp(log_p);
}

FidiReport extremal_fidi_check(std::span<const StepPath> paths, const ExtremalLaw& law,
                               std::span<const double> times) {
  law.validate();
  if (times.empty() || times.size() > 3) throw ParameterError("fidi check takes between 1 and 3 times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0 && times[i] <= 1.0)) throw ParameterError("fidi times must lie in (0, 1]");
    if (i > 0 && !(times[i] > times[i - 1])) throw ParameterError("fidi times must increase");
  }
  if (paths.size() < kMinFidiPaths) {
    throw InsufficientDataError("extremal_fidi_check needs at least 500 paths", paths.size());
  }
  const std::size_t k = times.size();
  FidiReport report;
  report.times.assign(times.begin(), times.end());
  report.paths = paths.size();
  std::vector<double> values(paths.size() * k);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (std::size_t i = 0; i < k; ++i) values[p * k + i] = paths[p](times[i]);
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> marginal(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) marginal[p] = values[p * k + i];
    const double s = times[i];
    report.marginals.push_back(stats::ks_test(marginal, [&](double x) { return law.cdf(x, s); }));
  }
  report.grid = {law.quantile(0.25), law.quantile(0.5), law.quantile(0.75)};
  std::size_t combos = 1;
  for (std::size_t i = 0; i < k; ++i) combos *= report.grid.size();
  std::vector<double> x(k);
  for (std::size_t c = 0; c < combos; ++c) {
    std::size_t code = c;
    for (std::size_t i = 0; i < k; ++i) {
      x[i] = report.grid[code % report.grid.size()];
      code /= report.grid.size();
    }
    std::size_t hits = 0;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      bool inside = true;
      for (std::size_t i = 0; i < k && inside; ++i) inside = values[p * k + i] <= x[i];
      hits += inside ? 1 : 0;
    }
    const double emp = static_cast<double>(hits) / static_cast<double>(paths.size());
    report.joint_max_deviation =
        std::max(report.joint_max_deviation, std::abs(emp - extremal_joint_cdf(law, times, x)));
  }
  return report;
}

std::string to_record(const StepPath& p) {
  return json{{"times", p.times}, {"levels", p.levels}, {"raw", p.raw}}.dump();
}

StepPath step_path_from_record(const std::string& line) {
  try {
    const auto rec = json::parse(line);
    return StepPath::make(rec.at("times").get<std::vector<double>>(),
                          rec.at("levels").get<std::vector<double>>(), rec.value("raw", false));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed step path record: ") + e.what());
  }
}

std::string fidi_record(const FidiReport& r) {
  json marginals = json::array();
  for (const auto& m : r.marginals) {
    marginals.push_back({{"statistic", m.statistic}, {"critical_1", m.critical_1}, {"n", m.sample_size}});
  }
  return json{{"times", r.times},
              {"paths", r.paths},
              {"grid", r.grid},
              {"joint_max_deviation", r.joint_max_deviation},
              {"marginals", marginals}}
      .dump();
}

}  // namespace xclust
