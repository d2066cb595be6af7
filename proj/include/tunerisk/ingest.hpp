#pragma once

// Empirical performance records and dataset metadata.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tunerisk/domain.hpp"

namespace tunerisk {

struct MetricInfo {
  std::string name;
  bool is_score = true;  // higher is better; risk = 1 - value
  double lo = 0.0;
  double hi = 1.0;
};

/// Looks up a supported metric. Throws ValidationError for unknown names.
[[nodiscard]] const MetricInfo& metric_info(std::string_view name);

/// Converts a metric value to risk (lower is better).
[[nodiscard]] double to_risk(const MetricInfo& metric, double value);

struct PerformanceRecord {
  std::string dataset_id;
  Configuration configuration;
  std::string metric;
  double value = 0.0;
  double risk = 0.0;

  friend bool operator==(const PerformanceRecord&, const PerformanceRecord&) = default;
};

/// Validated, immutable collection of records sharing a space and a metric.
class RecordSet {
 public:
  /// Validates every record against the space and metric bounds and derives
  /// its risk. Throws ValidationError on the first violation.
  RecordSet(ConfigurationSpace space, std::string metric, std::vector<PerformanceRecord> records);

  [[nodiscard]] const ConfigurationSpace& space() const noexcept { return space_; }
  [[nodiscard]] const std::string& metric() const noexcept { return metric_; }
  [[nodiscard]] const std::vector<PerformanceRecord>& records() const noexcept { return records_; }
  [[nodiscard]] const std::map<std::string, std::vector<std::size_t>>& index() const noexcept {
    return index_;
  }
  [[nodiscard]] std::vector<std::string> dataset_ids() const;

  friend bool operator==(const RecordSet& a, const RecordSet& b) {
    return a.space_ == b.space_ && a.metric_ == b.metric_ && a.records_ == b.records_;
  }

 private:
  ConfigurationSpace space_;
  std::string metric_;
  std::vector<PerformanceRecord> records_;
  std::map<std::string, std::vector<std::size_t>> index_;
};

struct DatasetMeta {
  std::string dataset_id;
  std::int64_t n_features = 1;
  std::optional<std::int64_t> n_instances;
};

using MetaTable = std::map<std::string, DatasetMeta>;

/// Records CSV: `dataset_id,metric,value,<param>...`. Parameter columns may
/// appear in any order; a column may be omitted only for parameters with a
/// fixed value. All row violations are collected and reported together with
/// their line numbers.
[[nodiscard]] RecordSet load_records(const std::filesystem::path& path,
                                     const ConfigurationSpace& space);
[[nodiscard]] RecordSet parse_records(std::string_view text, const ConfigurationSpace& space,
                                      std::string_view source = "<memory>");
/// Writes a records CSV, preceded by a config-hash line when one is given.
void write_records(const RecordSet& records, const std::filesystem::path& path,
                   std::string_view config_hash = {});
[[nodiscard]] std::string records_to_csv(const RecordSet& records);

/// Metadata CSV: `dataset_id,n_features[,n_instances]`.
[[nodiscard]] MetaTable load_meta(const std::filesystem::path& path);
[[nodiscard]] MetaTable parse_meta(std::string_view text, std::string_view source = "<memory>");

/// Normalizes an OpenML evaluation export (one evaluation per row) to a
/// RecordSet. The dataset column is `task_id`, `data_id`, or `dataset_id`;
/// the metric column is `function` (or `metric`); parameter columns match a
/// space parameter by exact name or by a `_name`, `.name`, or `__name`
/// suffix. Rows for other metrics are skipped.
[[nodiscard]] RecordSet convert_openml(const std::filesystem::path& path,
                                       const ConfigurationSpace& space,
                                       std::string_view metric);
[[nodiscard]] RecordSet parse_openml(std::string_view text, const ConfigurationSpace& space,
                                     std::string_view metric,
                                     std::string_view source = "<memory>");

}  // namespace tunerisk
