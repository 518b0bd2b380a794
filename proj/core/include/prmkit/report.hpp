#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace prmkit {

struct CurvePoint {
  double budget = 0.0;  // N, K, R or token budget, depending on the run
  double flops = 0.0;
  double metric = 0.0;
};

struct RunReport {
  std::string run_id;
  std::string command;
  std::string config_hash;
  std::vector<std::int64_t> seeds;
  std::string backend;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<nlohmann::json> rows;
  std::vector<CurvePoint> curve;
};

// Writes <out_dir>/<run_id>/summary.json and curve.csv (columns
// budget,flops,metric). Contains no timestamps, so identical runs produce
// identical bytes. Returns the run directory. Throws IOFailure.
std::filesystem::path emit_report(const RunReport& report, const std::filesystem::path& out_dir);

}  // namespace prmkit
