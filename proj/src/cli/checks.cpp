#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "xclust/cli.hpp"
#include "xclust/clusters.hpp"
#include "xclust/empirics.hpp"
#include "xclust/extremal.hpp"
#include "xclust/limitproc.hpp"
#include "xclust/parallel.hpp"
#include "xclust/stats.hpp"

namespace xclust::cli {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// What each simulated path contributes to the path-based checks.
struct PathDigest {
  double theta = 0.0;
  std::vector<Cluster> clusters;
  std::vector<double> y0;  // ||X_i|| / (u a_n) over exceedances
  StepPath maximal;
};

struct Context {
  const ExperimentConfig& config;
  ModelSpec model;  // config.model with the run seed
  std::size_t n;
  BlockScheme scheme;
  std::optional<double> theta;
  std::vector<PathDigest> digests;
  std::ostream* log;
};

ReportRecord record(const Context& ctx, const std::string& check, const std::string& quantity,
                    double value, double se, std::optional<double> reference,
                    const std::string& provenance, const std::string& verdict) {
  return ReportRecord{check, ctx.n, quantity, value, se, reference, provenance, verdict};
}

std::string within(double value, double reference, double band) {
  return std::abs(value - reference) <= band ? "pass" : "fail";
}

std::vector<Cluster> pooled_clusters(const Context& ctx) {
  std::vector<Cluster> out;
  for (const auto& d : ctx.digests) out.insert(out.end(), d.clusters.begin(), d.clusters.end());
  return out;
}

void simulate_paths(Context& ctx, bool need_maximal) {
  const std::size_t reps = ctx.config.replications;
  ctx.digests.assign(reps, {});
  normalizing_constant(ctx.model, ctx.n);
  parallel_for(reps, [&](std::size_t rep) {
    const auto path = generate_replication(ctx.model, ctx.n, rep);
    auto& d = ctx.digests[rep];
    const SeriesPath* one = &path;
    const std::span<const SeriesPath> paths(one, 1);
    d.theta = theta_per_path(paths, ctx.scheme)[0];
    try {
      d.clusters = extract_clusters(paths, ctx.scheme);
      for (auto& c : d.clusters) c.path_id = rep;
    } catch (const InsufficientDataError&) {
      d.clusters.clear();
    }
    const double x = ctx.scheme.threshold * path.a_n;
    for (std::size_t i = 0; i < path.n; ++i) {
      const double r = path.norm_at(i);
      if (r > x) d.y0.push_back(r / x);
    }
    if (need_maximal && path.dim == 1) d.maximal = maximal_path(path);
  });
}

void check_tail(const Context& ctx, std::vector<ReportRecord>& out) {
  std::vector<double> y0;
  for (const auto& d : ctx.digests) y0.insert(y0.end(), d.y0.begin(), d.y0.end());
  if (y0.size() < kMinExceedances) {
    out.push_back(record(ctx, "tail", "P(|Y0|>2)", static_cast<double>(y0.size()), kNan,
                         std::nullopt, "none", "insufficient"));
    return;
  }
  std::vector<double> above(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) above[i] = y0[i] > 2.0 ? 1.0 : 0.0;
  const auto est = mean_estimate(above);
  const double ref = std::pow(2.0, -ctx.model.alpha);
  out.push_back(record(ctx, "tail", "P(|Y0|>2)", est.value, est.std_error, ref, "closed_form",
                       within(est.value, ref, 3.0 * est.std_error)));
  const auto hill = stats::hill_estimator(y0, y0.size() - 1);
  out.push_back(record(ctx, "tail", "hill_alpha", hill.alpha, hill.std_error, ctx.model.alpha,
                       "model", within(hill.alpha, ctx.model.alpha, 3.0 * hill.std_error)));
}

void check_aprime(const Context& ctx, std::vector<ReportRecord>& out) {
  const auto f = ramp_functional(1.0, TimeWeight::One, ctx.scheme.threshold);
  const std::size_t reps = std::max<std::size_t>(ctx.config.replications, 1000);
  const auto d = diagnose_aprime(ctx.model, ctx.n, ctx.scheme, f, reps);
  if (ctx.model.kind == ModelKind::IidPareto) {
    out.push_back(record(ctx, "aprime", "joint-product", d.difference, d.std_error, 0.0, "theory",
                         within(d.difference, 0.0, 3.0 * d.std_error)));
  } else {
    out.push_back(record(ctx, "aprime", "joint-product", d.difference, d.std_error, 0.0,
                         "asymptotic", "info"));
  }
}

void check_ac(const Context& ctx, std::vector<ReportRecord>& out) {
  const std::size_t r = ctx.scheme.block_length;
  const auto window = ctx.model.dependence_window();
  std::size_t m = window ? *window + 1 : (r + 1) / 2;
  if (m >= r || 2 * r + 1 > ctx.n) {
    out.push_back(record(ctx, "ac", "lag=" + std::to_string(m), kNan, kNan, std::nullopt, "none",
                         "insufficient"));
    return;
  }
  try {
    const auto e = diagnose_ac(ctx.model, ctx.n, ctx.scheme, m, ctx.config.replications);
    const std::string verdict = window ? (e.value < 0.05 ? "pass" : "fail") : "info";
    out.push_back(record(ctx, "ac", "lag=" + std::to_string(m), e.value, e.std_error, 0.0,
                         window ? "theory" : "asymptotic", verdict));
  } catch (const InsufficientDataError&) {
    out.push_back(record(ctx, "ac", "lag=" + std::to_string(m), kNan, kNan, 0.0, "theory",
                         "insufficient"));
  }
}

void check_clusters(const Context& ctx, std::vector<ReportRecord>& out) {
  const auto clusters = pooled_clusters(ctx);
  if (clusters.empty()) {
    out.push_back(record(ctx, "clusters", "sum|Q|^alpha", kNan, kNan, std::nullopt, "none",
                         "insufficient"));
    return;
  }
  std::vector<double> mass(clusters.size()), size(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < clusters[i].size(); ++j) s += std::pow(clusters[i].q_norm(j), ctx.model.alpha);
    mass[i] = s;
    size[i] = static_cast<double>(clusters[i].size());
  }
  const auto m = mean_estimate(mass);
  // E sum_j ||Q_j||^alpha = 1 / theta; 5% slack absorbs the floor and block edges.
  if (ctx.theta) {
    const double ref = 1.0 / *ctx.theta;
    out.push_back(record(ctx, "clusters", "sum|Q|^alpha", m.value, m.std_error, ref, "theory",
                         within(m.value, ref, 3.0 * m.std_error + 0.05 * ref)));
  } else {
    out.push_back(record(ctx, "clusters", "sum|Q|^alpha", m.value, m.std_error, std::nullopt,
                         "none", "info"));
  }
  const auto s = mean_estimate(size);
  out.push_back(record(ctx, "clusters", "points_per_cluster", s.value, s.std_error, std::nullopt,
                       "none", "info"));
}

void check_theta(const Context& ctx, std::vector<ReportRecord>& out) {
  std::vector<double> per_path(ctx.digests.size());
  for (std::size_t i = 0; i < per_path.size(); ++i) per_path[i] = ctx.digests[i].theta;
  const auto est = mean_estimate(per_path);
  if (ctx.theta) {
    out.push_back(record(ctx, "theta", "theta_hat", est.value, est.std_error, *ctx.theta, "theory",
                         within(est.value, *ctx.theta, 3.0 * est.std_error)));
  } else {
    out.push_back(record(ctx, "theta", "theta_hat", est.value, est.std_error, std::nullopt, "none",
                         "info"));
  }
}

void check_lpareto(const Context& ctx, std::vector<ReportRecord>& out) {
  const auto clusters = pooled_clusters(ctx);
  if (clusters.size() < 100) {
    out.push_back(record(ctx, "lpareto", "ks_L", kNan, kNan, std::nullopt, "none", "insufficient"));
    return;
  }
  const auto ks = check_l_pareto(clusters, ctx.model.alpha);
  out.push_back(record(ctx, "lpareto", "ks_L", ks.statistic, 0.0, ks.critical_1, "ks_1pct",
                       ks.passes_1pct() ? "pass" : "fail"));
}

void check_independence(const Context& ctx, std::vector<ReportRecord>& out) {
  auto clusters = pooled_clusters(ctx);
  for (auto& c : clusters) c = raise_floor(c, kIndependenceFloor);
  if (clusters.size() < kMinIndependenceClusters) {
    out.push_back(record(ctx, "independence", "clusters", static_cast<double>(clusters.size()), kNan,
                         std::nullopt, "none", "insufficient"));
    return;
  }
  const auto stats_fns = default_cluster_statistics(ctx.model.alpha);
  const auto rep = xclust::check_independence(clusters, stats_fns, 1000, ctx.model.seed);
  for (const auto& e : rep.entries) {
    out.push_back(record(ctx, "independence", "dcor_p:" + e.name, e.p_value, 0.0, 0.01,
                         "permutation", e.p_value > 0.01 ? "pass" : "fail"));
  }
  for (const auto& f : rep.factorization) {
    std::ostringstream q;
    q << "residual:v=" << f.v;
    out.push_back(record(ctx, "independence", q.str(), f.residual, f.std_error, 0.0, "theory",
                         within(f.residual, 0.0, 3.0 * f.std_error)));
  }
}

void check_laplace(const Context& ctx, std::vector<ReportRecord>& out) {
  std::vector<TestFunctional> fs;
  for (double s : {0.5, 1.0, 2.0}) fs.push_back(step_functional(s, 1.0));
  const std::size_t reps = std::max<std::size_t>(ctx.config.replications, kMinLaplaceReps);
  const auto emp = laplace_empirical(ctx.model, ctx.n, fs, reps);
  std::optional<LimitSpec> limit;
  try {
    limit = LimitSpec::from_model(ctx.model, 1.0);
  } catch (const UnsupportedParameterError&) {
  }
  // Finite-n bias is larger for dependent models; their band is widened.
  const double width = ctx.model.kind == ModelKind::IidPareto ? 3.0 : 5.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (!limit) {
      out.push_back(record(ctx, "laplace", fs[i].id(), emp[i].value, emp[i].std_error, std::nullopt,
                           "none", "info"));
      continue;
    }
    const auto cf = laplace_closed_form(*limit, fs[i]);
    const double se = std::hypot(emp[i].std_error, cf.std_error);
    out.push_back(record(ctx, "laplace", fs[i].id(), emp[i].value, se, cf.value, "closed_form",
                         within(emp[i].value, cf.value, width * se)));
  }
}

void check_spectral(const Context& ctx, std::vector<ReportRecord>& out) {
  const double alpha = ctx.model.alpha;
  if (!(alpha < 2.0) || !ctx.theta) {
    out.push_back(record(ctx, "spectral", "spectral", kNan, kNan, std::nullopt, "none", "info"));
    return;
  }
  const auto clusters = pooled_clusters(ctx);
  if (clusters.size() < 100) {
    out.push_back(record(ctx, "spectral", "spectral", kNan, kNan, std::nullopt, "none", "insufficient"));
    return;
  }
  const std::size_t d = ctx.model.dim;
  const std::vector<double> t(d, 1.0 / std::sqrt(static_cast<double>(d)));
  const auto emp = spectral_functional(QSampler::from_clusters(clusters), *ctx.theta, alpha, t,
                                       clusters.size());
  const auto ref = spectral_functional(QSampler::from_model(ctx.model), *ctx.theta, alpha, t);
  out.push_back(record(ctx, "spectral", "spectral", emp.value, emp.std_error, ref.value, "closed_form",
                       within(emp.value, ref.value, 3.0 * emp.std_error + 0.05 * std::abs(ref.value))));
  if (alpha != 1.0) {
    out.push_back(record(ctx, "spectral", "cluster_index", cluster_index(emp.value, alpha),
                         std::abs(cluster_index(emp.std_error, alpha)), cluster_index(ref.value, alpha),
                         "closed_form", "info"));
  }
}

void check_extremal(const Context& ctx, std::vector<ReportRecord>& out) {
  if (ctx.model.dim != 1 || !ctx.theta) {
    out.push_back(record(ctx, "extremal", "fidi", kNan, kNan, std::nullopt, "none", "info"));
    return;
  }
  if (ctx.digests.size() < kMinFidiPaths) {
    out.push_back(record(ctx, "extremal", "fidi", static_cast<double>(ctx.digests.size()), kNan,
                         std::nullopt, "none", "insufficient"));
    return;
  }
  const auto k = kappa(*ctx.theta, ctx.model.alpha, QSampler::from_model(ctx.model));
  const ExtremalLaw law{k.value, ctx.model.alpha};
  std::vector<StepPath> paths;
  paths.reserve(ctx.digests.size());
  for (const auto& d : ctx.digests) paths.push_back(d.maximal);
  const double times[] = {0.5, 1.0};
  const auto rep = extremal_fidi_check(paths, law, times);
  for (std::size_t i = 0; i < rep.marginals.size(); ++i) {
    std::ostringstream q;
    q << "ks:s=" << rep.times[i];
    const auto& m = rep.marginals[i];
    out.push_back(record(ctx, "extremal", q.str(), m.statistic, 0.0, m.critical_1, "ks_1pct",
                         m.passes_1pct() ? "pass" : "fail"));
  }
  const double tol = std::max(0.03, 1.63 / std::sqrt(static_cast<double>(rep.paths)));
  out.push_back(record(ctx, "extremal", "joint_max_deviation", rep.joint_max_deviation, 0.0, tol,
                       "tolerance", rep.joint_max_deviation < tol ? "pass" : "fail"));
}

bool wants(const ExperimentConfig& c, const std::string& id) {
  return std::find(c.checks.begin(), c.checks.end(), id) != c.checks.end();
}

}  // namespace

std::vector<ReportRecord> run_checks(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  const ModelSpec model = config.model.with_seed(config.seed);
  std::optional<double> theta = theoretical_theta(model);
  std::vector<ReportRecord> out;

  const bool path_checks = std::any_of(config.checks.begin(), config.checks.end(), [](const auto& c) {
    return c == "tail" || c == "clusters" || c == "theta" || c == "lpareto" ||
           c == "independence" || c == "spectral" || c == "extremal";
  });

  for (std::size_t n : config.n_grid) {
    Context ctx{config, model, n, BlockScheme::make(n, config.block_exponent, config.threshold),
                theta, {}, log};
    if (log) *log << "n=" << n << " a_n=" << normalizing_constant(model, n) << '\n';
    if (path_checks) simulate_paths(ctx, wants(config, "extremal"));
    for (const auto& check : config.checks) {
      if (log) *log << "  " << check << '\n';
      if (check == "tail") check_tail(ctx, out);
      else if (check == "aprime") check_aprime(ctx, out);
      else if (check == "ac") check_ac(ctx, out);
      else if (check == "clusters") check_clusters(ctx, out);
      else if (check == "theta") check_theta(ctx, out);
      else if (check == "lpareto") check_lpareto(ctx, out);
      else if (check == "independence") check_independence(ctx, out);
      else if (check == "laplace") check_laplace(ctx, out);
      else if (check == "spectral") check_spectral(ctx, out);
      else if (check == "extremal") check_extremal(ctx, out);
    }
  }
  // The Remark table does not depend on the model or the n-grid.
  if (wants(config, "m1demo")) {
    const auto rows = remark_records(demo_remark());
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

std::vector<RemarkRow> demo_remark() {
  PointMeasure limit;
  limit.times = {0.5};
  limit.coords = {1.0};
  const auto target = t_plus(limit);
  std::vector<RemarkRow> rows;
  for (std::size_t n = 4; n <= 1024; n *= 2) {
    PointMeasure m;
    m.times = {0.5 - 1.0 / static_cast<double>(n), 0.5};
    m.coords = {0.5, 1.0};
    const auto path = t_plus(m);
    rows.push_back({n, m1_distance(path, target), j1_distance(path, target),
                    uniform_distance(path, target), m1_grid_tolerance(path, target)});
  }
  return rows;
}

std::vector<ReportRecord> remark_records(const std::vector<RemarkRow>& rows) {
  std::vector<ReportRecord> out;
  if (rows.empty()) return out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::string m1_verdict = "info";
    if (i + 1 == rows.size()) {
      m1_verdict = r.m1 < 0.01 && r.m1 <= rows.front().m1 ? "pass" : "fail";
    }
    out.push_back({"m1demo", r.n, "m1", r.m1, r.tolerance, 0.01, "grid", m1_verdict});
    out.push_back({"m1demo", r.n, "j1", r.j1, 0.0, 0.24, "grid", r.j1 >= 0.24 ? "pass" : "fail"});
    out.push_back({"m1demo", r.n, "uniform", r.uniform, 0.0, std::nullopt, "exact", "info"});
  }
  return out;
}

}  // namespace xclust::cli
