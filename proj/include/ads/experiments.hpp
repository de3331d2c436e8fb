#pragma once
#include <string>
#include <vector>

#include "ads/autoscale.hpp"
#include "ads/config.hpp"
#include "ads/io.hpp"

namespace ads {

struct ExperimentResult {
  std::string csv_name;  // "<experiment>.csv"
  CsvTable table;
  nlohmann::ordered_json summary;
};

// Pure function of (cfg, seed range); `jobs` only batches seeds across
// threads, row order is always by (seed, emission order within seed).
ExperimentResult run_experiment(const ScenarioConfig& cfg, int jobs = 1);

// Writes <out>/<experiment>.csv and <out>/summary.json; returns their paths.
std::pair<std::string, std::string> write_experiment(
    const ExperimentResult& res, const std::string& out_dir);

// Built-in pressure schedule: staged ramp on op1, a bandwidth spike on op2
// at t=60s, a stateful spike on op3 at t=90s. 5 s sampling over 120 s.
std::vector<PressureSample> gen_pressure_schedule();

}  // namespace ads
