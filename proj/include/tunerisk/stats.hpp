#pragma once

// One-sided non-parametric non-inferiority test on paired risks.
//
// H0: median relative risk >= delta, H1: median relative risk < delta.
// Signed ranks are computed for w = (x_f - x_nf) / x_nf - delta; the statistic
// is the absolute sum of negative ranks, standardized with the normal
// approximation of the signed-rank distribution. Large z favors rejecting H0.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tunerisk/risk.hpp"

namespace tunerisk {

/// Fewest non-zero differences for which the normal approximation is used.
inline constexpr std::size_t kMinSignedRankObservations = 6;

struct PairedObservation {
  double fixed_risk = 0.0;
  double nonfixed_risk = 0.0;  // must be > 0
  std::string dataset_id;
  std::int64_t seed_index = 0;
};

struct SignedRankStatistic {
  std::size_t n = 0;             // non-zero differences ranked
  std::size_t n_zero = 0;        // exact zeros dropped
  double negative_rank_sum = 0;  // s_nr
  double positive_rank_sum = 0;
  double z = 0.0;
};

/// Ranks |w| ascending with average ranks for exact ties after dropping zeros.
/// Throws DataError when fewer than kMinSignedRankObservations remain.
[[nodiscard]] SignedRankStatistic signed_rank_statistic(std::span<const double> w);

/// P(Z >= z) for a standard normal Z.
[[nodiscard]] double normal_upper_tail(double z);

struct NonInferiorityResult {
  std::string param_name;
  std::size_t n = 0;
  std::size_t n_zero = 0;
  double s_nr = 0.0;
  double z = 0.0;
  double p = 1.0;
  double delta = 0.0;
  std::optional<bool> rejected;  // set by the multiple-testing step
};

[[nodiscard]] NonInferiorityResult noninferiority_test(std::span<const PairedObservation> obs,
                                                       double delta,
                                                       std::string_view param_name = {});

struct HolmDecision {
  std::string name;
  double p = 1.0;
  double threshold = 0.0;  // alpha / (m - k + 1) at the hypothesis' rank
  bool rejected = false;
};

/// Holm's step-down procedure. Output keeps the input order.
[[nodiscard]] std::vector<HolmDecision> holm_bonferroni(
    std::span<const std::pair<std::string, double>> pvalues, double alpha);

/// Applies Holm's procedure to a family of test results in place.
void apply_holm(std::vector<NonInferiorityResult>& results, double alpha);

/// Converts risk pairs to observations, dropping every dataset that has a
/// zero non-fixed risk (the relative risk is undefined there).
[[nodiscard]] std::vector<PairedObservation> observations_from_pairs(
    std::span<const RiskPair> pairs, std::vector<std::string>* dropped_datasets = nullptr);

/// Averages fixed and non-fixed risks over seeds, one observation per dataset.
[[nodiscard]] std::vector<PairedObservation> collapse_seeds(
    std::span<const PairedObservation> obs);

}  // namespace tunerisk
