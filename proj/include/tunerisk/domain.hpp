#pragma once

// Configuration spaces, hyperparameter values, and deterministic sampling.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace tunerisk {

enum class ParamKind { kContinuous, kInteger, kBoolean, kNominal };
enum class Scale { kLinear, kLog };

/// A single hyperparameter value. The alternative in use follows the kind of
/// the owning domain: continuous -> double, integer -> int64, boolean -> bool,
/// nominal -> string.
using Value = std::variant<double, std::int64_t, bool, std::string>;

/// Canonical text form: shortest round-trip decimal for doubles,
/// "true"/"false" for booleans, nominal values verbatim.
std::string format_value(const Value& v);

std::string_view to_string(ParamKind kind);
std::string_view to_string(Scale scale);

class HyperparameterDomain {
 public:
  static HyperparameterDomain continuous(std::string name, double lo, double hi,
                                         Scale scale = Scale::kLinear);
  static HyperparameterDomain integer(std::string name, std::int64_t lo, std::int64_t hi);
  static HyperparameterDomain boolean(std::string name);
  static HyperparameterDomain nominal(std::string name, std::vector<std::string> values);

  /// Pins the parameter to a constant that is never tuned.
  HyperparameterDomain with_fixed_value(Value v) &&;

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] ParamKind kind() const noexcept { return kind_; }
  [[nodiscard]] Scale scale() const noexcept { return scale_; }
  [[nodiscard]] double lo() const noexcept { return lo_; }
  [[nodiscard]] double hi() const noexcept { return hi_; }
  [[nodiscard]] const std::vector<Value>& choices() const noexcept { return choices_; }
  [[nodiscard]] const std::optional<Value>& fixed_value() const noexcept { return fixed_; }

  [[nodiscard]] bool is_numeric() const noexcept {
    return kind_ == ParamKind::kContinuous || kind_ == ParamKind::kInteger;
  }
  [[nodiscard]] bool is_categorical() const noexcept { return !is_numeric(); }

  /// Number of distinct integer values; only meaningful for integer domains.
  [[nodiscard]] std::int64_t integer_cardinality() const noexcept;

  [[nodiscard]] bool contains(const Value& v) const;

  /// Parses the canonical text form of a value of this domain.
  /// Throws ValidationError when the text does not denote a valid value.
  [[nodiscard]] Value parse(std::string_view text) const;

  /// Numeric view of a value (integers widened, categorical -> index).
  [[nodiscard]] double to_number(const Value& v) const;

  friend bool operator==(const HyperparameterDomain&, const HyperparameterDomain&) = default;

 private:
  HyperparameterDomain() = default;
  void validate() const;

  std::string name_;
  ParamKind kind_ = ParamKind::kContinuous;
  Scale scale_ = Scale::kLinear;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<Value> choices_;
  std::optional<Value> fixed_;
};

/// One value per domain, stored in the canonical domain order of the space.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<std::pair<std::string, Value>> entries)
      : entries_(std::move(entries)) {}

  [[nodiscard]] const std::vector<std::pair<std::string, Value>>& entries() const noexcept {
    return entries_;
  }
  [[nodiscard]] const Value* find(std::string_view name) const noexcept;
  [[nodiscard]] const Value& at(std::string_view name) const;
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

  /// "name=value;name=value" in canonical order; used for deterministic ties.
  [[nodiscard]] std::string serialize() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::vector<std::pair<std::string, Value>> entries_;
};

class ConfigurationSpace {
 public:
  ConfigurationSpace(std::string algorithm, std::vector<HyperparameterDomain> domains);

  [[nodiscard]] const std::string& algorithm() const noexcept { return algorithm_; }
  [[nodiscard]] const std::vector<HyperparameterDomain>& domains() const noexcept {
    return domains_;
  }
  [[nodiscard]] const HyperparameterDomain* find(std::string_view name) const noexcept;
  [[nodiscard]] const HyperparameterDomain& at(std::string_view name) const;

  /// Throws ValidationError naming the offending parameter.
  void validate(const Configuration& config) const;

  friend bool operator==(const ConfigurationSpace&, const ConfigurationSpace&) = default;

 private:
  std::string algorithm_;
  std::vector<HyperparameterDomain> domains_;
};

/// Identifies the substream a single hyperparameter draw comes from.
struct SeedKey {
  std::string dataset_id;
  std::int64_t seed_index = 0;
  std::string param_name;
  std::int64_t iteration = 0;
  /// Experiment-wide root seed; all randomness descends from it.
  std::uint64_t root_seed = 0;

  [[nodiscard]] std::uint64_t stream_key() const;
};

/// Draws one value uniformly from the domain's range on its declared scale.
[[nodiscard]] Value sample_value(const HyperparameterDomain& domain, const SeedKey& key);

struct FixedParam {
  std::string name;
  Value value;
};

/// Samples every tunable parameter from its own substream. A pinned parameter
/// takes the given value without affecting the draws of the others.
[[nodiscard]] Configuration sample_configuration(const ConfigurationSpace& space,
                                                 std::string_view dataset_id,
                                                 std::int64_t seed_index, std::int64_t iteration,
                                                 const std::optional<FixedParam>& fixed = {},
                                                 std::uint64_t root_seed = 0);

// Configuration-space file: {"algorithm": ..., "params": [{name, kind,
// range|values, scale, fixed_value?}]}
[[nodiscard]] ConfigurationSpace space_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json space_to_json(const ConfigurationSpace& space);
[[nodiscard]] ConfigurationSpace load_space(const std::filesystem::path& path);

/// Converts a JSON scalar to a value of the domain (numbers, bools, strings).
[[nodiscard]] Value value_from_json(const HyperparameterDomain& domain, const nlohmann::json& j);
[[nodiscard]] nlohmann::json value_to_json(const Value& v);

}  // namespace tunerisk
