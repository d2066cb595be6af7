#pragma once

// Fixed vs non-fixed random-search experiment over synthetic response surfaces.
//
// Every (dataset, seed, condition) run performs a nested cross-validated
// random search: per outer fold, each sampled configuration is scored by its
// mean accuracy over the inner folds, and the winner is evaluated on the outer
// fold. Folds of a surrogate are noise substreams rather than data splits.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunerisk/domain.hpp"
#include "tunerisk/fit.hpp"
#include "tunerisk/ingest.hpp"
#include "tunerisk/risk.hpp"

namespace tunerisk {

/// Optimum location, optionally linked to the number of features:
/// optimum = coefficient * p^p_exponent.
struct OptimumSpec {
  double coefficient = 1.0;
  double p_exponent = 0.0;

  [[nodiscard]] double at(double p) const;
};

struct FlatTerm {
  std::string param;
};

/// depth * min(1, curvature * (T(v) - T(optimum))^2), T = ln on log scale.
struct QuadraticTerm {
  std::string param;
  Scale scale = Scale::kLog;
  OptimumSpec optimum;
  double curvature = 1.0;
  double depth = 0.1;
};

/// Fixed penalty per category (canonical value text); unlisted values cost 0.
struct CategoricalTerm {
  std::string param;
  std::map<std::string, double> penalties;
};

using EffectTerm = std::variant<FlatTerm, QuadraticTerm, CategoricalTerm>;

struct SurrogateSpec {
  std::string dataset_id;
  DatasetMeta meta;
  double base_risk = 0.0;
  std::vector<EffectTerm> terms;
  double noise_sd = 0.0;

  /// Throws ConfigError unless the noiseless risk stays within [0, 1].
  void validate(const ConfigurationSpace& space) const;
};

/// Risk of `config` on the surrogate without fold noise.
[[nodiscard]] double noiseless_risk(const SurrogateSpec& surrogate, const Configuration& config);

/// Identifies a fold: inner >= 0 is an inner validation fold of the given
/// outer fold, inner == kTestFold is the outer test fold itself.
struct FoldKey {
  static constexpr std::int32_t kTestFold = -1;
  std::int32_t outer = 0;
  std::int32_t inner = kTestFold;
};

/// Noiseless risk plus Gaussian fold noise drawn from a substream keyed by
/// (root seed, dataset, fold, configuration), clamped to [0, 1].
[[nodiscard]] double evaluate(const SurrogateSpec& surrogate, const Configuration& config,
                              FoldKey fold, std::uint64_t root_seed = 0);

struct CvSpec {
  std::int32_t outer_folds = 10;
  std::int32_t inner_folds = 5;
  std::int32_t search_iterations = 100;
  std::int32_t seeds = 10;

  void validate() const;
};

/// Where the fixed condition's value comes from.
struct ConstantDefault {
  Value value;
};
struct FormulaDefault {
  FunctionFamily family = FunctionFamily::kInverse;
  double coefficient = 0.0;
  /// Divide the formula by p (feature count -> fraction of features).
  bool relative_to_p = false;
};
struct TableDefault {
  std::map<std::string, Value> values;  // dataset_id -> default
};
using DefaultSource = std::variant<ConstantDefault, FormulaDefault, TableDefault>;

/// Default value for one dataset, coerced into the parameter's domain
/// (integers rounded). Throws ConfigError if missing or out of domain.
[[nodiscard]] Value resolve_default(const DefaultSource& source, const HyperparameterDomain& domain,
                                    const DatasetMeta& meta);

[[nodiscard]] std::string describe(const DefaultSource& source);

struct ExperimentPlan {
  std::string name;
  ConfigurationSpace space{"", {}};
  std::string param;
  DefaultSource default_source = ConstantDefault{};
  std::vector<SurrogateSpec> surrogates;
  CvSpec cv;
  std::uint64_t root_seed = 0;

  /// Checks the space, the studied parameter, every surrogate, and that a
  /// default is defined for every dataset.
  void validate() const;
};

enum class Condition { kFixed, kNonFixed };
[[nodiscard]] std::string_view to_string(Condition c);

struct FoldTrace {
  std::vector<double> validation_accuracy;  // per iteration, mean over inner folds
  std::size_t chosen_iteration = 0;
  Configuration chosen;
  double test_risk = 0.0;
};

struct RunTrace {
  std::string dataset_id;
  Condition condition = Condition::kNonFixed;
  std::string param_name;
  std::int64_t seed_index = 0;
  std::vector<FoldTrace> folds;
  double final_test_risk = 0.0;
  /// Mean over outer folds of the winner's validation accuracy.
  double final_validation_accuracy = 0.0;
  /// Per iteration, mean over outer folds of the running maximum accuracy.
  std::vector<double> best_so_far;
};

/// Configuration sampled at `iteration`; the studied parameter is pinned to
/// `fixed_value` in the fixed condition. Other parameters use the same
/// substreams in both conditions.
[[nodiscard]] Configuration search_candidate(const ExperimentPlan& plan,
                                             const SurrogateSpec& surrogate, Condition condition,
                                             std::int64_t seed_index, std::int64_t iteration,
                                             const Value& fixed_value);

[[nodiscard]] RunTrace run_condition(const ExperimentPlan& plan, const SurrogateSpec& surrogate,
                                     Condition condition, std::int64_t seed_index);

struct ExecutionOptions {
  int threads = 0;  // 0 = OpenMP default
};

struct ExperimentResult {
  std::vector<RiskPair> pairs;   // dataset x seed, plan order
  std::vector<RunTrace> traces;  // dataset x seed x {fixed, nonfixed}
};

/// Runs all (dataset, seed, condition) cells in parallel. Output order and
/// values are independent of the thread count.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentPlan& plan,
                                              const ExecutionOptions& options = {});

/// Single-threaded reference of run_experiment.
[[nodiscard]] ExperimentResult run_experiment_serial(const ExperimentPlan& plan);

struct ConditionCurve {
  Condition condition = Condition::kFixed;
  std::vector<double> mean;
  std::vector<double> sd;  // population sd across groups
};

/// Per iteration, the condition with the higher best-so-far accuracy of a
/// (dataset, seed) group gets rank 1 and the other rank 2; ties get 1.5.
/// Returns {fixed, nonfixed} curves. Throws DataError when a group lacks a
/// condition.
[[nodiscard]] std::vector<ConditionCurve> rank_curves(std::span<const RunTrace> traces);

/// Pointwise mean and sd of best-so-far accuracy per condition present.
[[nodiscard]] std::vector<ConditionCurve> accuracy_curves(std::span<const RunTrace> traces);

// Plan file (JSON). Relative paths inside resolve against `base_dir`.
[[nodiscard]] ExperimentPlan plan_from_json(const nlohmann::json& j,
                                            const std::filesystem::path& base_dir);
[[nodiscard]] ExperimentPlan load_plan(const std::filesystem::path& path);
[[nodiscard]] DefaultSource default_source_from_json(const nlohmann::json& j,
                                                     const ConfigurationSpace& space,
                                                     std::string_view param,
                                                     const std::filesystem::path& base_dir);
[[nodiscard]] SurrogateSpec surrogate_from_json(const nlohmann::json& j);
[[nodiscard]] std::vector<SurrogateSpec> surrogates_from_json(const nlohmann::json& j,
                                                              std::uint64_t root_seed);

/// Reads a defaults CSV (`param,held_out_dataset,value,...`) for one param.
[[nodiscard]] TableDefault load_default_table(const std::filesystem::path& path,
                                              const HyperparameterDomain& domain);

}  // namespace tunerisk
