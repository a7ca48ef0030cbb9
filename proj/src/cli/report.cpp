#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xclust/cli.hpp"

namespace xclust::cli {

using nlohmann::ordered_json;

namespace {

ordered_json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(12) << v;
  return os.str();
}

std::ofstream open_output(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  return out;
}

}  // namespace

std::string to_json_line(const ReportRecord& r) {
  ordered_json j;
  j["check"] = r.check;
  j["n"] = r.n;
  j["quantity"] = r.quantity;
  j["value"] = number_or_null(r.value);
  j["stderr"] = number_or_null(r.std_error);
  j["reference"] = r.reference ? number_or_null(*r.reference) : ordered_json(nullptr);
  j["provenance"] = r.provenance;
  j["verdict"] = r.verdict;
  return j.dump();
}

void write_reports(const std::filesystem::path& dir, const std::vector<ReportRecord>& records) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  auto report = open_output(dir / "report.jsonl");
  for (const auto& r : records) report << to_json_line(r) << '\n';
  if (!report) throw IoError("failed writing " + (dir / "report.jsonl").string());

  std::map<std::string, std::vector<const ReportRecord*>> by_check;
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (!by_check.count(r.check)) order.push_back(r.check);
    by_check[r.check].push_back(&r);
  }
  for (const auto& check : order) {
    const auto file = dir / (check + ".csv");
    auto csv = open_output(file);
    csv << "n,quantity,value,stderr,reference,verdict\n";
    for (const auto* r : by_check[check]) {
      csv << r->n << ",\"" << r->quantity << "\"," << csv_number(r->value) << ','
          << csv_number(r->std_error) << ',' << (r->reference ? csv_number(*r->reference) : "")
          << ',' << r->verdict << '\n';
    }
    if (!csv) throw IoError("failed writing " + file.string());
  }
}

int run(const ExperimentConfig& config, std::ostream* log) {
  const auto records = run_checks(config, log);
  write_reports(config.output, records);
  for (const auto& r : records) {
    if (r.failed()) return 1;
  }
  return 0;
}

}  // namespace xclust::cli
