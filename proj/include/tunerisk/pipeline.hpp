#pragma once

// End-to-end run: records -> leave-one-out defaults -> fixed vs non-fixed
// experiments -> tuning risk -> non-inferiority tests with Holm's correction.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunerisk/artifacts.hpp"
#include "tunerisk/harness.hpp"
#include "tunerisk/ingest.hpp"

namespace tunerisk {

/// Fit a meta-feature function instead of using the leave-one-out table.
struct FitSetting {
  FunctionFamily family = FunctionFamily::kPower;
  /// The parameter is a fraction of p (e.g. max_features).
  bool relative_to_p = false;
};

struct PipelineConfig {
  std::filesystem::path records;
  std::filesystem::path space;
  std::optional<std::filesystem::path> meta;
  std::optional<std::string> metric;  // checked against the records when set
  std::size_t n = 10;
  double delta = 0.01;
  double alpha = 0.05;
  std::vector<std::string> params;  // empty: every free parameter with > 1 value
  std::map<std::string, FitSetting> fits;
  nlohmann::json surrogates;
  CvSpec cv;
  std::uint64_t seed = 0;
  AggregateOptions aggregate;
  /// The JSON the config was read from; hashed together with input digests.
  nlohmann::json source;
};

/// Relative paths resolve against `base_dir`.
[[nodiscard]] PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                                       const std::filesystem::path& base_dir);
[[nodiscard]] nlohmann::json read_json_file(const std::filesystem::path& path);

struct PipelineReport {
  std::string hash;
  std::vector<SummaryRow> rows;
};

/// Writes defaults.csv, hist.csv, fit_<param>.json, experiment/<param>/...,
/// risk_summary.csv, risk_pairs.csv, test.csv and summary.csv into `out_dir`.
[[nodiscard]] PipelineReport run_pipeline(const PipelineConfig& config,
                                          const std::filesystem::path& out_dir,
                                          const ExecutionOptions& options = {});

/// Parameters studied when none are listed: no fixed value, more than one
/// possible value.
[[nodiscard]] std::vector<std::string> free_parameters(const ConfigurationSpace& space);

/// Synthetic performance records: `samples` random configurations per
/// surrogate, scored on the surrogate's first outer test fold.
[[nodiscard]] RecordSet simulate_records(const ConfigurationSpace& space,
                                         const std::vector<SurrogateSpec>& surrogates,
                                         std::size_t samples, const std::string& metric,
                                         std::uint64_t seed);

void write_meta(const std::vector<SurrogateSpec>& surrogates, const std::filesystem::path& path,
                std::string_view hash);

/// Thread count from TUNERISK_THREADS (unset or 0: OpenMP default).
[[nodiscard]] ExecutionOptions execution_options_from_env();

}  // namespace tunerisk
