#include "clinli/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <future>

#include "clinli/error.hpp"

namespace clinli::harness {

using nlohmann::json;

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw Error("mean_std: no values");
  MeanStd out;
  out.n = values.size();
  double sum = 0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

SeedReport aggregate_runs(std::string experiment, std::string source_domain, std::vector<RunResult> runs) {
  if (runs.empty()) throw Error("aggregate_runs: no runs");
  SeedReport r;
  r.experiment = std::move(experiment);
  r.source_domain = std::move(source_domain);
  r.model = runs.front().model;
  r.transfer_mode = runs.front().transfer_mode;
  std::vector<double> dev, test;
  for (const auto& run : runs) {
    dev.push_back(run.dev.accuracy);
    test.push_back(run.test.accuracy);
  }
  r.dev_accuracy = mean_std(dev);
  r.test_accuracy = mean_std(test);
  r.runs = std::move(runs);
  return r;
}

namespace {
json ms_json(const MeanStd& m) { return {{"mean", m.mean}, {"stddev", m.stddev}, {"n", m.n}}; }
MeanStd ms_from(const json& j) { return {j.at("mean"), j.at("stddev"), j.at("n")}; }
}  // namespace

json seed_report_to_json(const SeedReport& r) {
  json runs = json::array();
  for (const auto& run : r.runs) runs.push_back(run_result_to_json(run));
  return {{"experiment", r.experiment},
          {"model", r.model},
          {"source_domain", r.source_domain},
          {"transfer_mode", r.transfer_mode},
          {"dev_accuracy", ms_json(r.dev_accuracy)},
          {"test_accuracy", ms_json(r.test_accuracy)},
          {"runs", runs}};
}

SeedReport seed_report_from_json(const json& j) {
  SeedReport r;
  r.experiment = j.at("experiment");
  r.model = j.at("model");
  r.source_domain = j.value("source_domain", "");
  r.transfer_mode = j.value("transfer_mode", "none");
  r.dev_accuracy = ms_from(j.at("dev_accuracy"));
  r.test_accuracy = ms_from(j.at("test_accuracy"));
  for (const auto& run : j.value("runs", json::array())) r.runs.push_back(run_result_from_json(run));
  return r;
}

std::vector<RunResult> run_seeds(const std::vector<std::uint64_t>& seeds,
                                 const std::function<RunResult(std::uint64_t)>& run_one, std::size_t jobs) {
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  std::vector<RunResult> out(seeds.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) out[i] = run_one(seeds[i]);
    return out;
  }
  for (std::size_t start = 0; start < seeds.size(); start += jobs) {
    std::vector<std::future<RunResult>> pending;
    for (std::size_t i = start; i < std::min(seeds.size(), start + jobs); ++i)
      pending.push_back(std::async(std::launch::async, run_one, seeds[i]));
    for (std::size_t i = 0; i < pending.size(); ++i) out[start + i] = pending[i].get();
  }
  return out;
}

std::vector<GainRow> gain_table(const std::vector<SeedReport>& reports, const std::string& baseline_experiment) {
  const SeedReport* base = nullptr;
  for (const auto& r : reports)
    if (r.experiment == baseline_experiment) base = &r;
  if (!base) throw Error("baseline experiment \"" + baseline_experiment + "\" not among the reports");
  std::vector<GainRow> rows;
  for (const auto& r : reports) {
    if (&r == base) continue;
    GainRow row{r.source_domain, r.transfer_mode, r.model, 100.0 * base->test_accuracy.mean,
                100.0 * r.test_accuracy.mean, 0.0};
    row.gain = row.accuracy - row.baseline;
    rows.push_back(row);
  }
  return rows;
}

std::string gains_csv(const std::vector<GainRow>& rows) {
  std::string out = "source_domain,transfer_mode,model,baseline,accuracy,gain\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%+.4f\n", r.baseline, r.accuracy, r.gain);
    out += r.source_domain + "," + r.transfer_mode + "," + r.model + buf;
  }
  return out;
}

}  // namespace clinli::harness
