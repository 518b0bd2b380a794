#include "prmkit/report.hpp"

#include "prmkit/errors.hpp"
#include "prmkit/jsonl.hpp"

namespace prmkit {
namespace {

std::string number(double x) { return nlohmann::json(x).dump(); }

}  // namespace

std::filesystem::path emit_report(const RunReport& report, const std::filesystem::path& out_dir) {
  if (report.run_id.empty()) throw InvalidArgument("emit_report: empty run id");
  const auto dir = out_dir / report.run_id;

  nlohmann::json summary{
      {"run_id", report.run_id},
      {"command", report.command},
      {"config_hash", report.config_hash},
      {"seeds", report.seeds},
      {"backend", report.backend},
      {"metrics", report.metrics},
      {"rows", report.rows},
  };
  write_text_atomic(dir / "summary.json",
                    summary.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");

  std::string csv = "budget,flops,metric\n";
  for (const auto& p : report.curve) {
    csv += number(p.budget) + "," + number(p.flops) + "," + number(p.metric) + "\n";
  }
  write_text_atomic(dir / "curve.csv", csv);
  return dir;
}

}  // namespace prmkit
