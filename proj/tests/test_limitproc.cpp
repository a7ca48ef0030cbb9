#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "xclust/limitproc.hpp"
#include "xclust/parallel.hpp"

using namespace xclust;

namespace {

LimitSpec limit(double alpha, double theta, double u, QSampler q) {
  LimitSpec s;
  s.alpha = alpha;
  s.theta = theta;
  s.truncation = u;
  s.q = std::move(q);
  return s;
}

double ramp_h(double r, double level) { return std::max(0.0, std::min(r / level, 2.0) - 1.0); }

}  // namespace

TEST_CASE("Q samplers of catalog models") {
  const auto iid = QSampler::from_model(ModelSpec::iid(1.0, 0.75));
  REQUIRE(iid.atom_count() == 2);
  CHECK(iid.atom(0)[0] == 1.0);
  CHECK(iid.atom(1)[0] == -1.0);
  CHECK(iid.probability(0) == doctest::Approx(0.75));
  CHECK_FALSE(iid.empirical());

  const auto ar = QSampler::from_model(ModelSpec::ar1(1.0, 0.5));
  REQUIRE(ar.atom_count() == 1);
  CHECK(ar.atom_size(0) == 40);  // 0.5^39 > 1e-12 > 0.5^40
  CHECK(ar.atom(0)[3] == 0.125);

  const auto mm = QSampler::from_model(ModelSpec::moving_maximum(1.0, {2.0, 1.0, 4.0}));
  REQUIRE(mm.atom_count() == 1);
  CHECK(std::vector<double>(mm.atom(0).begin(), mm.atom(0).end()) == std::vector<double>{0.5, 0.25, 1.0});

  const auto multi = QSampler::from_model(ModelSpec::mm_multivariate(2.0, {{1.0, 2.0}, {1.0}}, false));
  REQUIRE(multi.atom_count() == 2);
  CHECK(multi.probability(0) == doctest::Approx(4.0 / 5.0));
  CHECK(std::vector<double>(multi.atom(0).begin(), multi.atom(0).end()) ==
        std::vector<double>{0.5, 0.0, 1.0, 0.0});

  auto g = make_engine(3);
  std::size_t first = 0;
  for (int i = 0; i < 20'000; ++i) first += iid.draw_index(g) == 0;
  CHECK(std::abs(first / 20'000.0 - 0.75) < 3.0 * std::sqrt(0.75 * 0.25 / 20'000.0));

  // MM c=(1,1): one large innovation enters two consecutive values, so the
  // cluster is {1, 1}. Oracle: condition short raw sequences on a large value.
  const auto mm11 = QSampler::from_model(ModelSpec::moving_maximum(1.0, {1.0, 1.0}));
  REQUIRE(mm11.atom_count() == 1);
  CHECK(std::vector<double>(mm11.atom(0).begin(), mm11.atom(0).end()) == std::vector<double>{1.0, 1.0});
  auto og = oracle::rng(29);
  std::size_t kept = 0, pairs = 0;
  for (int s = 0; s < 1'000'000; ++s) {
    double z[6];
    for (double& v : z) v = 1.0 / (1.0 - oracle::unif(og));
    const auto top = static_cast<std::size_t>(std::max_element(z, z + 6) - z);
    if (z[top] <= 1e4 || top == 0 || top == 5) continue;
    ++kept;
    std::vector<double> q;
    for (int t = 1; t < 6; ++t) {
      const double x = std::max(z[t], z[t - 1]) / z[top];
      if (x >= 0.1) q.push_back(x);
    }
    pairs += q == std::vector<double>{1.0, 1.0};
  }
  REQUIRE(kept > 200);
  CHECK(static_cast<double>(pairs) / static_cast<double>(kept) > 0.97);

  CHECK_THROWS_AS(QSampler::point_mass({0.5, 0.9}), ParameterError);
  CHECK_THROWS_AS(QSampler::point_mass({1.0, 0.5, 0.2}, 2), DimensionError);
  CHECK_THROWS_AS(QSampler::discrete({{1.0}}, {-1.0}), ParameterError);
}

TEST_CASE("sample_limit: Poisson cluster counts") {
  const std::size_t samples = 100'000;
  std::vector<double> zero(samples), count(samples);
  const auto unit = limit(1.0, 1.0, 1.0, QSampler::point_mass({1.0}));
  const auto half = limit(1.0, 0.5, 1.0, QSampler::from_model(ModelSpec::ar1(1.0, 0.5)));
  parallel_for(samples, [&](std::size_t i) {
    zero[i] = sample_limit(unit, derive_seed(1ull << 40, i)).anchors.empty() ? 1.0 : 0.0;
    count[i] = static_cast<double>(sample_limit(half, derive_seed(2ull << 40, i)).anchors.size());
  });
  const auto p0 = mean_estimate(zero);
  CHECK(std::abs(p0.value - std::exp(-1.0)) < 3.0 * p0.std_error);
  const auto mean = mean_estimate(count);
  CHECK(std::abs(mean.value - 0.5) < 3.0 * mean.std_error);
}

TEST_CASE("sample_limit: magnitudes of a point-mass cluster form the Poisson process") {
  const double alpha = 1.5, theta = 0.8;
  const auto spec = limit(alpha, theta, 1.0, QSampler::point_mass({1.0}));
  const std::size_t samples = 40'000;
  std::vector<double> low(samples), high(samples), both_zero(samples);
  std::vector<double> anchors;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto m = sample_limit(spec, derive_seed(3ull << 40, i));
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double r = m.norm_at(j);
      low[i] += r <= 2.0;
      high[i] += r > 2.0;
      CHECK(m.times[j] >= 0.0);
      CHECK(m.times[j] <= 1.0);
    }
    both_zero[i] = low[i] == 0.0 && high[i] == 0.0;
    anchors.insert(anchors.end(), m.anchors.begin(), m.anchors.end());
  }
  const double m_low = theta * (1.0 - std::pow(2.0, -alpha));
  const double m_high = theta * std::pow(2.0, -alpha);
  const auto lo = mean_estimate(low), hi = mean_estimate(high), z = mean_estimate(both_zero);
  CHECK(std::abs(lo.value - m_low) < 3.0 * lo.std_error);
  CHECK(std::abs(hi.value - m_high) < 3.0 * hi.std_error);
  // Independent Poisson counts: P(both empty) = e^{-theta}.
  CHECK(std::abs(z.value - oracle::poisson_pmf(m_low, 0) * oracle::poisson_pmf(m_high, 0)) <
        3.0 * z.std_error);

  const auto ks = stats::ks_test(anchors, [&](double v) { return v <= 1.0 ? 0.0 : 1.0 - std::pow(v, -alpha); });
  CHECK(ks.passes_1pct());
}

TEST_CASE("sample_limit: points are anchor times Q") {
  const auto spec = limit(1.0, 0.6, 0.5, QSampler::from_model(ModelSpec::iid(1.0, 0.5, 2)));
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto m = sample_limit(spec, s);
    CHECK(m.dim == 2);
    CHECK(m.floor == 0.5);
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto id = m.cluster_ids[j];
      CHECK(m.norm_at(j) == doctest::Approx(m.anchors[id]));
      CHECK(m.times[j] == m.anchor_times[id]);
      CHECK(m.anchors[id] > 0.5);
    }
  }
  CHECK(sample_limit(spec, 7).coords == sample_limit(spec, 7).coords);
}

TEST_CASE("restrict_anchors keeps whole clusters above u'") {
  const auto spec = limit(1.0, 0.5, 1.0, QSampler::from_model(ModelSpec::moving_maximum(1.0, {1.0, 0.3})));
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto m = sample_limit(spec, s);
    const auto r = restrict_anchors(m, 2.0);
    std::size_t kept = 0;
    for (double a : m.anchors) kept += a > 2.0;
    CHECK(r.anchors.size() == kept);
    CHECK(r.size() == 2 * kept);
    CHECK(r.floor == 2.0);
    for (std::size_t j = 0; j < r.size(); ++j) CHECK(r.anchors[r.cluster_ids[j]] > 2.0);
  }
  PointMeasure bare;
  bare.times = {0.5};
  bare.coords = {3.0};
  CHECK_THROWS_AS(restrict_anchors(bare, 2.0), ParameterError);
}

TEST_CASE("restriction consistency") {
  const auto spec = limit(1.0, 0.5, 1.0, QSampler::from_model(ModelSpec::moving_maximum(1.0, {1.0, 1.0})));
  const auto rep = restriction_check(spec, 2.0, 10'000, 1ull << 40);
  CHECK(rep.anchors.passes_1pct());
  CHECK(rep.count_p_value > 0.01);
  // Expected cluster count above 2 per sample is theta / 2.
  CHECK(std::abs(rep.direct_count / 10'000.0 - 0.25) < 3.0 * std::sqrt(0.25 / 10'000.0));
  CHECK_THROWS_AS(restriction_check(spec, 0.5, 100, 1), ParameterError);
}

TEST_CASE("closed-form Laplace functional: step functional on a unit cluster") {
  const auto spec = limit(1.0, 1.0, 1.0, QSampler::point_mass({1.0}));
  for (double s : {0.5, 1.0, 2.0, 7.0}) {
    const auto e = laplace_closed_form(spec, step_functional(s, 1.0));
    CHECK(e.value == doctest::Approx(std::exp(-(1.0 - std::exp(-s)))).epsilon(1e-10));
    CHECK(e.std_error == 0.0);
  }
  CHECK(laplace_closed_form(spec, step_functional(1e6, 1.0)).value == doctest::Approx(std::exp(-1.0)));
  CHECK(laplace_closed_form(spec, step_functional(0.0, 1.0)).value == 1.0);
  // Raising the support level to 2 scales the mass by 2^{-alpha}.
  CHECK(laplace_closed_form(spec, step_functional(1.0, 2.0)).value ==
        doctest::Approx(std::exp(-0.5 * (1.0 - std::exp(-1.0)))).epsilon(1e-10));
  CHECK_THROWS_AS(laplace_closed_form(limit(1.0, 1.0, 2.0, QSampler::point_mass({1.0})),
                                      step_functional(1.0, 1.0)),
                  DomainError);
}

TEST_CASE("closed-form Laplace functional matches brute-force quadrature") {
  const std::vector<double> q{0.5, 1.0, 0.3};
  const auto sampler = QSampler::point_mass(q);
  struct Case {
    double alpha, theta, level, s;
    TimeWeight g;
  };
  const Case cases[] = {{1.5, 0.7, 1.0, 1.0, TimeWeight::One},
                        {0.8, 0.4, 2.0, 2.0, TimeWeight::Rising},
                        {1.0, 1.0, 1.0, 0.5, TimeWeight::Falling}};
  for (const auto& c : cases) {
    const auto f = ramp_functional(c.s, c.g, c.level);
    const auto spec = limit(c.alpha, c.theta, 1.0, sampler);
    const double value = laplace_closed_form(spec, f).value;
    const double brute = oracle::laplace_brute(
        c.theta, c.alpha, q, [&](double r) { return ramp_h(r, c.level); },
        [&](double t) { return f.time_factor(t); }, c.s, c.level, 1.0, 20'000, 100);
    CAPTURE(f.id());
    CHECK(value == doctest::Approx(brute).epsilon(1e-5));
  }
}

TEST_CASE("closed-form Laplace functional does not depend on the truncation") {
  const auto q = QSampler::from_model(ModelSpec::ar1(1.2, 0.6, 0.7));
  for (const auto& f : functional_library(1.0)) {
    const double a = laplace_closed_form(limit(1.2, 0.64, 1.0, q), f).value;
    const double b = laplace_closed_form(limit(1.2, 0.64, 0.3, q), f).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("closed-form Laplace functional is monotone in f") {
  auto g = oracle::rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const double alpha = 0.3 + 1.6 * oracle::unif(g);
    const double theta = 0.1 + 0.9 * oracle::unif(g);
    std::vector<double> q{1.0};
    const int extra = static_cast<int>(oracle::unif(g) * 4);
    for (int j = 0; j < extra; ++j) q.push_back(oracle::unif(g));
    const auto spec = limit(alpha, theta, 1.0, QSampler::point_mass(q));
    const double s1 = 0.1 + 3.0 * oracle::unif(g);
    const double s2 = s1 + 0.01 + oracle::unif(g);
    const double level = 1.0 + oracle::unif(g);
    // Larger scale or lower level is pointwise larger.
    const double base = laplace_closed_form(spec, step_functional(s1, level)).value;
    CHECK(laplace_closed_form(spec, step_functional(s2, level)).value <= base);
    CHECK(laplace_closed_form(spec, step_functional(s1, 1.0)).value <= base);
    CHECK(laplace_closed_form(spec, ramp_functional(s1, TimeWeight::One, level)).value >= base);
    CHECK(laplace_closed_form(spec, ramp_functional(s1, TimeWeight::Rising, level)).value >=
          laplace_closed_form(spec, ramp_functional(s1, TimeWeight::One, level)).value);
  }
}

TEST_CASE("closed-form Laplace functional: inner Monte Carlo over many atoms") {
  auto g = oracle::rng(23);
  std::vector<std::vector<double>> atoms;
  std::vector<double> w;
  for (int a = 0; a < 300; ++a) {
    atoms.push_back({1.0, oracle::unif(g), oracle::unif(g)});
    w.push_back(0.5 + oracle::unif(g));
  }
  const auto spec = limit(1.0, 0.5, 1.0, QSampler::discrete(atoms, w));
  const auto f = ramp_functional(2.0, TimeWeight::One, 1.0);
  const auto exact = laplace_closed_form(spec, f, 300);
  CHECK(exact.std_error == 0.0);
  const auto mc = laplace_closed_form(spec, f, 200, 5);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.value - exact.value) < 3.0 * mc.std_error);
}

TEST_CASE("sampler self-consistency for the functional library") {
  const auto spec = LimitSpec::from_model(ModelSpec::moving_maximum(1.0, {1.0, 0.5, 0.8}));
  CHECK(spec.theta == doctest::Approx(1.0 / 2.3));
  const auto fs = functional_library(1.0);
  const auto emp = laplace_empirical(spec, fs, 20'000, 9ull << 40);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto cf = laplace_closed_form(spec, fs[i]);
    CAPTURE(fs[i].id());
    CHECK(std::abs(emp[i].value - cf.value) < 3.0 * std::hypot(emp[i].std_error, cf.std_error));
  }
  CHECK_THROWS_AS(laplace_empirical(spec, fs, 999, 1), ParameterError);
}

TEST_CASE("empirical Laplace functional on iid paths") {
  // N_n(s 1{x > 1}) is Binomial(n, 1/n) times s: E e^{-N} = (1 - (1 - e^{-s}) / n)^n.
  const std::size_t n = 10'000;
  std::vector<TestFunctional> fs;
  for (double s : {0.5, 1.0, 2.0}) fs.push_back(step_functional(s, 1.0));
  const auto emp = laplace_empirical(ModelSpec::iid(1.0).with_seed(10ull << 40), n, fs, 4000);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double exact = std::pow(1.0 - (1.0 - std::exp(-fs[i].scale)) / n, static_cast<double>(n));
    CHECK(std::abs(emp[i].value - exact) < 3.0 * emp[i].std_error);
  }
}

TEST_CASE("point measure of a path") {
  const auto path = generate(ModelSpec::iid(1.0, 0.5).with_seed(3), 500);
  const auto m = point_measure_from_path(path, 0.05);
  std::size_t j = 0;
  for (std::size_t i = 0; i < path.n; ++i) {
    if (std::abs(path.values[i]) <= 0.05 * path.a_n) continue;
    REQUIRE(j < m.size());
    CHECK(m.times[j] == doctest::Approx((i + 1) / 500.0));
    CHECK(m.coords[j] == doctest::Approx(path.values[i] / path.a_n));
    ++j;
  }
  CHECK(j == m.size());
  CHECK(m.cluster_ids.empty());
  CHECK_THROWS_AS(point_measure_from_path(path, 0.0), ParameterError);
}

TEST_CASE("spectral functional") {
  const std::vector<double> up{1.0}, down{-1.0};
  const auto unit = QSampler::point_mass({1.0});
  for (double alpha : {0.5, 1.0, 1.5}) {
    CHECK(spectral_functional(unit, 1.0, alpha, up).value == doctest::Approx(alpha / (2.0 - alpha)));
    CHECK(spectral_functional(unit, 1.0, alpha, down).value == 0.0);
  }
  // Moving maximum c = (1, 1): Q = {1, 1}, so E(Q_0 + Q_1)^alpha = 2^alpha.
  const auto mm = ModelSpec::moving_maximum(0.5, {1.0, 1.0});
  const double theta = theoretical_theta(mm).value();
  const auto e = spectral_functional(QSampler::from_model(mm), theta, 0.5, up);
  CHECK(e.value == doctest::Approx(std::sqrt(2.0) * 0.5 * 0.5 / 1.5));

  // Two-dimensional: direction (1, 1)/sqrt 2 on the signed iid cluster law.
  const auto biv = QSampler::from_model(ModelSpec::iid(1.0, 0.75, 2));
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<double> diag{r, r};
  // Positive atoms (weight 0.75) contribute r^alpha.
  CHECK(spectral_functional(biv, 1.0, 1.0, diag).value == doctest::Approx(0.75 * r));

  // Many atoms: Monte Carlo within 3 SE of the enumeration.
  auto g = oracle::rng(31);
  std::vector<std::vector<double>> atoms;
  for (int a = 0; a < 500; ++a) atoms.push_back({1.0, 2.0 * oracle::unif(g) - 1.0});
  const auto many = QSampler::discrete(atoms, std::vector<double>(500, 1.0));
  const auto exact = spectral_functional(many, 0.6, 1.2, up, 500);
  const auto mc = spectral_functional(many, 0.6, 1.2, up, 400, 8);
  CHECK(exact.std_error == 0.0);
  CHECK(std::abs(mc.value - exact.value) < 3.0 * mc.std_error);

  CHECK_THROWS_AS(spectral_functional(unit, 1.0, 2.0, up), ParameterError);
  CHECK_THROWS_AS(spectral_functional(unit, 0.0, 1.0, up), ParameterError);
  CHECK_THROWS_AS(spectral_functional(unit, 1.0, 1.0, diag), DimensionError);
  const std::vector<double> longer{2.0};
  CHECK_THROWS_AS(spectral_functional(unit, 1.0, 1.0, longer), ParameterError);
}

TEST_CASE("cluster index") {
  const double expected = 0.5 / (std::tgamma(1.5) * std::cos(M_PI / 4.0)) / 3.0;
  CHECK(cluster_index(1.0 / 3.0, 0.5) == doctest::Approx(expected));
  CHECK(expected == doctest::Approx(0.265962).epsilon(1e-5));
  CHECK(cluster_index(0.0, 1.5) == 0.0);
  CHECK_THROWS_AS(cluster_index(1.0, 1.0), UnsupportedParameterError);
  CHECK_THROWS_AS(cluster_index(1.0, 2.0), ParameterError);
}

TEST_CASE("limit spec from a model") {
  const auto s = LimitSpec::from_model(ModelSpec::ar1(2.0, 0.9), 1.5);
  CHECK(s.theta == doctest::Approx(0.19));
  CHECK(s.truncation == 1.5);
  CHECK_THROWS_AS(LimitSpec::from_model(ModelSpec::ar1(1.0, 0.5, 0.7)), UnsupportedParameterError);
  auto bad = s;
  bad.theta = 1.5;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("point measure and Laplace records") {
  const auto spec = limit(1.0, 0.9, 1.0, QSampler::from_model(ModelSpec::iid(1.0, 0.5, 2)));
  std::vector<PointMeasure> ms;
  for (std::uint64_t s = 0; s < 20; ++s) ms.push_back(sample_limit(spec, s));
  std::stringstream ss;
  write_point_measures(ss, ms);
  const auto back = read_point_measures(ss, 2);
  REQUIRE(back.size() == ms.size());
  for (std::size_t i = 0; i < ms.size(); ++i) {
    CHECK(back[i].times == ms[i].times);
    CHECK(back[i].coords == ms[i].coords);
    CHECK(back[i].cluster_ids == ms[i].cluster_ids);
    CHECK(back[i].floor == ms[i].floor);
  }

  std::stringstream wrong_dim;
  write_point_measures(wrong_dim, ms);
  CHECK_THROWS(read_point_measures(wrong_dim, 3));
  std::stringstream garbage("{\"sample\":0,\"t\":");
  CHECK_THROWS_AS(read_point_measures(garbage, 1), IoError);

  const auto rec = nlohmann::json::parse(laplace_record(step_functional(2.0), {0.25, 0.01}));
  CHECK(rec["value"] == 0.25);
  CHECK(rec["stderr"] == 0.01);
  CHECK(rec["functional"] == step_functional(2.0).id());
}
