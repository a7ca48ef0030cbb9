#include <iostream>

#include <CLI11.hpp>

#include "xclust/cli.hpp"
#include "xclust/parallel.hpp"

namespace xclust::cli {

int main_entry(int argc, char** argv) {
  CLI::App app{"Simulation and verification of heavy-tailed cluster point processes"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned jobs = 0;
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--out", out, "Output directory");
  app.add_option("--jobs", jobs, "Maximum parallel workers (0 = all cores)");

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run the checks of a JSON experiment config");
  run_cmd->add_option("config", config_path, "Config file")->required();
  run_cmd->fallthrough();
  auto* remark_cmd = app.add_subcommand("demo-remark", "M1 versus J1 on the split-jump sequence");
  remark_cmd->fallthrough();
  auto* version_cmd = app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  set_max_jobs(jobs);

  try {
    if (version_cmd->parsed()) {
      std::cout << "xclust " << XCLUST_VERSION << '\n';
      return 0;
    }
    if (remark_cmd->parsed()) {
      const auto records = remark_records(demo_remark());
      for (const auto& r : records) std::cout << to_json_line(r) << '\n';
      if (out) write_reports(*out, records);
      for (const auto& r : records) {
        if (r.failed()) return 1;
      }
      return 0;
    }
    auto config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (out) config.output = *out;
    const int status = run(config, &std::cerr);
    std::cerr << (status == 0 ? "all checks passed" : "some checks failed") << " ("
              << (config.output / "report.jsonl").string() << ")\n";
    return status;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace xclust::cli
