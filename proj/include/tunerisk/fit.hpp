#pragma once

// Meta-feature dependent defaults: single-coefficient functions of the number
// of features p, fitted by least squares on pooled top-n values.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunerisk/defaults.hpp"
#include "tunerisk/ingest.hpp"

namespace tunerisk {

enum class FunctionFamily {
  kLinear,    // a * p
  kPower,     // p ^ b
  kExpSqrt,   // c ^ sqrt(p)
  kConstant,  // a
  kInverse,   // 1 / p (no coefficient)
  kSqrt,      // sqrt(p) (no coefficient)
};

/// Accepts "a*p", "p^b", "c^sqrt(p)", "constant", "1/p", "sqrt(p)".
[[nodiscard]] FunctionFamily parse_family(std::string_view text);
[[nodiscard]] std::string_view to_string(FunctionFamily family);
[[nodiscard]] bool has_coefficient(FunctionFamily family);

/// Evaluates a family at p with the given coefficient (ignored when fixed).
[[nodiscard]] double evaluate_family(FunctionFamily family, double coefficient, double p);

struct FitMetrics {
  double rmse = 0.0;
  double r2 = 0.0;
  std::optional<double> rmsle;
  std::optional<double> lr2;
};

/// RMSE, R^2 = 1 - SS_res / SS_tot, and (when `log_metrics`) RMSLE and R^2 of
/// the ln-transformed pairs. R^2 is NaN when the observations are constant.
/// Throws DataError for mismatched or short inputs, or for non-positive
/// values when log metrics are requested.
[[nodiscard]] FitMetrics fit_metrics(std::span<const double> predictions,
                                     std::span<const double> observations,
                                     bool log_metrics = true);

struct MetaPoint {
  double p = 0.0;
  double value = 0.0;
};

struct FittedFunction {
  FunctionFamily family = FunctionFamily::kConstant;
  std::optional<double> coefficient;
  FitMetrics metrics;
  std::size_t n_points = 0;

  [[nodiscard]] double operator()(double p) const {
    return evaluate_family(family, coefficient.value_or(0.0), p);
  }
  /// Human-readable form, e.g. "p^0.74".
  [[nodiscard]] std::string describe() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

struct ScalarMinimum {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
};

/// Brent's method on [lo, hi]: golden-section steps with parabolic
/// interpolation. Stops when the bracket is within rel_tol * |x| + abs_tol.
/// Throws DataError when max_iterations is exhausted.
[[nodiscard]] ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo,
                                            double hi, double rel_tol = 1e-9,
                                            double abs_tol = 1e-15, int max_iterations = 500);

/// Least-squares fit of one family to (p, value) points. Log metrics are
/// reported when all predictions and observations are positive.
[[nodiscard]] FittedFunction fit_points(std::span<const MetaPoint> points, FunctionFamily family);

struct MetaFitOptions {
  /// Multiply pooled values by p before fitting (fraction -> feature count).
  bool values_times_p = false;
};

/// Pools the top-n values of `param` over every dataset against that
/// dataset's feature count and fits `family`.
[[nodiscard]] FittedFunction fit_meta_function(const TopNSubset& top, std::string_view param,
                                               const MetaTable& meta, FunctionFamily family,
                                               const ConfigurationSpace& space,
                                               const MetaFitOptions& options = {});

}  // namespace tunerisk
