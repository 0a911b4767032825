#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "clinli/harness/training.hpp"
#include "json.hpp"

namespace clinli::harness {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one value
  std::size_t n = 0;
};

/// Throws Error on empty input.
MeanStd mean_std(const std::vector<double>& values);

struct SeedReport {
  std::string experiment;
  std::string model;
  std::string source_domain;
  std::string transfer_mode;
  std::vector<RunResult> runs;
  MeanStd dev_accuracy;
  MeanStd test_accuracy;
};

SeedReport aggregate_runs(std::string experiment, std::string source_domain, std::vector<RunResult> runs);
nlohmann::json seed_report_to_json(const SeedReport& report);
SeedReport seed_report_from_json(const nlohmann::json& j);

/// Runs `run_one` once per seed, with up to `jobs` seeds in flight.
std::vector<RunResult> run_seeds(const std::vector<std::uint64_t>& seeds,
                                 const std::function<RunResult(std::uint64_t)>& run_one, std::size_t jobs = 1);

struct GainRow {
  std::string source_domain;
  std::string transfer_mode;
  std::string model;
  double baseline = 0.0;
  double accuracy = 0.0;
  double gain = 0.0;  // accuracy - baseline, both mean test accuracy in points
};

/// One row per variant against the named baseline report (matched by
/// experiment name). Throws Error when the baseline is absent.
std::vector<GainRow> gain_table(const std::vector<SeedReport>& reports, const std::string& baseline_experiment);
std::string gains_csv(const std::vector<GainRow>& rows);

}  // namespace clinli::harness
