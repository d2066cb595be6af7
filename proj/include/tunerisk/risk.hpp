#pragma once

// Tuning risk: how much worse the fixed condition does than the non-fixed one.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tunerisk {

struct RiskPair {
  std::string dataset_id;
  std::int64_t seed_index = 0;
  double fixed_risk = 0.0;
  double nonfixed_risk = 0.0;
};

/// fixed - nonfixed. Negative when the search did not reach the default.
[[nodiscard]] double tuning_risk(const RiskPair& pair);

/// (fixed - nonfixed) / nonfixed, or nullopt when the non-fixed risk is 0.
[[nodiscard]] std::optional<double> relative_tuning_risk(const RiskPair& pair);

struct ExcludedPair {
  std::string dataset_id;
  std::int64_t seed_index = 0;
  std::string reason;
};

struct TuningRiskSummary {
  std::string param_name;
  double d = 0.0;      // mean tuning risk
  double s = 0.0;      // sd of tuning risk
  double d_rel = 0.0;  // mean relative tuning risk over retained pairs
  double s_rel = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_pairs_used = 0;  // retained for the relative aggregate
  std::vector<ExcludedPair> excluded;
};

enum class Deviation { kPopulation, kSample };

struct AggregateOptions {
  Deviation deviation = Deviation::kPopulation;
};

/// Means and standard deviations over all pairs. Datasets with any zero
/// non-fixed risk are dropped from the relative aggregates as a whole.
/// Summation follows (dataset_id, seed_index) order, so the result does not
/// depend on input order. Throws DataError when no pair is retained.
[[nodiscard]] TuningRiskSummary aggregate(std::span<const RiskPair> pairs,
                                          std::string_view param_name = {},
                                          const AggregateOptions& options = {});

/// Datasets whose pairs include a zero non-fixed risk, mapped to the reason.
[[nodiscard]] std::map<std::string, std::string> zero_risk_datasets(std::span<const RiskPair> pairs);

/// Pairs file: CSV `param,dataset_id,seed,fixed_risk,nonfixed_risk`; '#'
/// lines are comments. Returns pairs grouped by param in file order.
[[nodiscard]] std::map<std::string, std::vector<RiskPair>> load_pairs(
    const std::filesystem::path& path);
[[nodiscard]] std::map<std::string, std::vector<RiskPair>> parse_pairs(
    std::string_view text, std::string_view source = "<memory>");

}  // namespace tunerisk
