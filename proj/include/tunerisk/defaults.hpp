#pragma once

// Leave-one-out default values from top-n performance data.
//
// For each dataset j the default of a hyperparameter is the value that occurs
// most often among the n best configurations of every *other* dataset.
// Continuous and large integer domains are discretized first with
// Freedman-Diaconis bins computed in the domain's scale space.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tunerisk/domain.hpp"
#include "tunerisk/ingest.hpp"

namespace tunerisk {

/// Integer domains with more possible values than this are binned.
inline constexpr std::int64_t kDiscreteIntegerLimit = 50;

struct TopNEntry {
  Configuration configuration;
  double risk = 0.0;
};

struct TopNSubset {
  std::size_t n = 0;
  /// Per dataset, exactly n entries sorted by (risk, serialized configuration).
  std::map<std::string, std::vector<TopNEntry>> entries;

  [[nodiscard]] std::size_t total() const noexcept;
};

/// Selects the n lowest-risk records of every dataset. Ties at the cutoff are
/// broken by the canonical configuration serialization.
[[nodiscard]] TopNSubset top_n(const RecordSet& records, std::size_t n);

/// Quantile with linear interpolation between order statistics:
/// h = (N - 1) q, Q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
/// `sorted` must be ascending and non-empty.
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double q);

/// Freedman-Diaconis bin width 2 IQR / N^(1/3). Returns 0 when IQR is 0.
[[nodiscard]] double fd_bin_width(std::span<const double> values);

/// Equal-width bins anchored at the smallest pooled value, in scale space.
struct BinSpec {
  double lo = 0.0;     // first edge (transformed space)
  double hi = 0.0;     // largest pooled value (transformed space)
  double width = 0.0;  // Freedman-Diaconis width
  Scale scale = Scale::kLinear;
  std::size_t count = 0;

  [[nodiscard]] std::vector<double> edges() const;
  [[nodiscard]] std::size_t index_of(double transformed) const;
  [[nodiscard]] double midpoint(std::size_t k) const { return lo + (static_cast<double>(k) + 0.5) * width; }
};

/// Builds bins for already-transformed values; nullopt when the FD width is 0.
[[nodiscard]] std::optional<BinSpec> make_bins(std::span<const double> transformed, Scale scale);

/// Maps a value into the space where binning happens (ln for log scales).
[[nodiscard]] double to_scale_space(double v, Scale scale);
[[nodiscard]] double from_scale_space(double t, Scale scale);

struct DefaultAssignment {
  std::string param_name;
  std::string held_out_dataset;
  Value value;
  /// Number of pooled entries in the winning bin or category.
  std::size_t support = 0;
  std::size_t pool_size = 0;
  double mean_risk = 0.0;
  /// Winning bin bounds in the original scale; absent for discrete modes.
  std::optional<std::pair<double, double>> bin;
};

/// Default for `param` computed without any entry of `held_out`. The
/// held-out id need not be present in `top`; at least two other datasets are
/// required.
[[nodiscard]] DefaultAssignment derive_default(const TopNSubset& top, std::string_view param,
                                               std::string_view held_out,
                                               const ConfigurationSpace& space);

/// Leave-one-out defaults for every dataset in `top`, in dataset order.
/// Held-out datasets are processed in parallel; the result is identical to
/// derive_all_defaults_serial.
[[nodiscard]] std::vector<DefaultAssignment> derive_all_defaults(const TopNSubset& top,
                                                                 std::string_view param,
                                                                 const ConfigurationSpace& space);
[[nodiscard]] std::vector<DefaultAssignment> derive_all_defaults_serial(
    const TopNSubset& top, std::string_view param, const ConfigurationSpace& space);

/// Pooled top-n histogram over all datasets, for plotting.
struct HistogramBin {
  std::string label;  // category value, or empty for numeric bins
  double lo = 0.0;    // numeric bin bounds in the original scale
  double hi = 0.0;
  std::size_t count = 0;
};

[[nodiscard]] std::vector<HistogramBin> top_n_histogram(const TopNSubset& top,
                                                        std::string_view param,
                                                        const ConfigurationSpace& space);

}  // namespace tunerisk
