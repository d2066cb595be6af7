#pragma once

// Artifact writers. Every CSV starts with a "# config-hash: <hex>" line and
// every JSON document carries a "config_hash" member, so reruns can be
// compared by hash.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunerisk/defaults.hpp"
#include "tunerisk/fit.hpp"
#include "tunerisk/harness.hpp"
#include "tunerisk/risk.hpp"
#include "tunerisk/stats.hpp"

namespace tunerisk {

/// 16 hex digits of FNV-1a over the compact dump of `config`.
[[nodiscard]] std::string config_hash(const nlohmann::json& config);

/// FNV-1a hex digest of a file's bytes; IoError if unreadable.
[[nodiscard]] std::string file_digest(const std::filesystem::path& path);

void write_defaults_csv(const std::filesystem::path& path, std::string_view hash,
                        std::span<const DefaultAssignment> defaults);

void write_fit_json(const std::filesystem::path& path, std::string_view hash,
                    std::string_view param, const FittedFunction& fit);

struct ParamHistogram {
  std::string param;
  std::vector<HistogramBin> bins;
};
void write_histogram_csv(const std::filesystem::path& path, std::string_view hash,
                         std::span<const ParamHistogram> histograms);

void write_risk_summary_csv(const std::filesystem::path& path, std::string_view hash,
                            std::span<const TuningRiskSummary> summaries);

/// Per-pair risks with d and the relative d (empty when undefined).
void write_risk_pairs_csv(const std::filesystem::path& path, std::string_view hash,
                          const std::map<std::string, std::vector<RiskPair>>& pairs);

[[nodiscard]] std::string decision_text(const NonInferiorityResult& r);

void write_test_csv(const std::filesystem::path& path, std::string_view hash,
                    std::span<const NonInferiorityResult> results);

/// pairs.csv, traces.csv, curves.csv, ranks.csv and winners.csv in `dir`.
void write_experiment(const std::filesystem::path& dir, std::string_view hash,
                      const ExperimentPlan& plan, const ExperimentResult& result);

struct SummaryRow {
  std::string param;
  std::string default_text;
  TuningRiskSummary risk;
  NonInferiorityResult test;
};
void write_summary_csv(const std::filesystem::path& path, std::string_view hash,
                       std::span<const SummaryRow> rows);

}  // namespace tunerisk
