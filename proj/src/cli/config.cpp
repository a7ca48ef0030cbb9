#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xclust/cli.hpp"

namespace xclust::cli {

using nlohmann::json;

namespace {

std::vector<std::vector<double>> coefficient_rows(const json& c) {
  if (!c.is_array() || c.empty()) throw ConfigError("model.coefficients must be a nonempty array");
  if (c.front().is_number()) return {c.get<std::vector<double>>()};
  return c.get<std::vector<std::vector<double>>>();
}

ModelSpec parse_model(const json& m) {
  if (!m.is_object()) throw ConfigError("model must be an object");
  const auto kind = model_kind_from_string(m.at("kind").get<std::string>());
  const double alpha = m.value("alpha", 1.0);
  const double p = m.value("p", 1.0);
  ModelSpec spec;
  switch (kind) {
    case ModelKind::IidPareto:
      spec = ModelSpec::iid(alpha, p, m.value("dim", std::size_t{1}));
      break;
    case ModelKind::Ar1:
      spec = ModelSpec::ar1(alpha, m.at("phi").get<double>(), p);
      break;
    case ModelKind::MovingMaximum: {
      const auto rows = coefficient_rows(m.at("coefficients"));
      if (rows.size() != 1) throw ConfigError("moving-maximum takes a single coefficient row");
      spec = ModelSpec::moving_maximum(alpha, rows.front());
      break;
    }
    case ModelKind::MmMultivariate:
      spec = ModelSpec::mm_multivariate(alpha, coefficient_rows(m.at("coefficients")),
                                        m.value("common_shock", false));
      break;
  }
  const auto norm = m.value("norm", std::string("sup"));
  if (norm == "euclidean") spec.norm = Norm::Euclidean;
  else if (norm != "sup") throw ConfigError("model.norm must be \"sup\" or \"euclidean\"");
  return spec;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (checks.empty()) throw ConfigError("checks must name at least one check");
  for (const auto& c : checks) {
    if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end()) {
      throw ConfigError("unknown check '" + c + "'");
    }
  }
  if (n_grid.empty()) throw ConfigError("n_grid must be nonempty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) throw ConfigError("n_grid entries must be at least 2");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ConfigError("n_grid must be strictly ascending");
  }
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (!(block_exponent > 0.0 && block_exponent < 1.0)) throw ConfigError("block_exponent must lie in (0, 1)");
  if (!(threshold > 0.0)) throw ConfigError("threshold must be positive");
  try {
    model.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  try {
    const auto j = json::parse(text);
    cfg.model = parse_model(j.at("model"));
    cfg.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
    cfg.block_exponent = j.value("block_exponent", 0.5);
    cfg.threshold = j.value("threshold", 1.0);
    cfg.replications = j.value("replications", std::size_t{100});
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.output = j.value("output", std::string("xclust-out"));
    cfg.checks = j.at("checks").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace xclust::cli
