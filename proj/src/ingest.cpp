#include "tunerisk/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "tunerisk/csv.hpp"
#include "tunerisk/error.hpp"

namespace tunerisk {

namespace {

const std::array<MetricInfo, 10> kMetrics{{
    {"accuracy", true, 0.0, 1.0},
    {"auc", true, 0.0, 1.0},
    {"balanced_accuracy", true, 0.0, 1.0},
    {"f1", true, 0.0, 1.0},
    {"precision", true, 0.0, 1.0},
    {"recall", true, 0.0, 1.0},
    {"predictive_accuracy", true, 0.0, 1.0},
    {"area_under_roc_curve", true, 0.0, 1.0},
    {"error_rate", false, 0.0, 1.0},
    {"zero_one_loss", false, 0.0, 1.0},
}};

// OpenML evaluation measure names and their local equivalents.
const std::array<std::pair<std::string_view, std::string_view>, 4> kOpenmlAliases{{
    {"predictive_accuracy", "accuracy"},
    {"area_under_roc_curve", "auc"},
    {"f_measure", "f1"},
    {"balanced_accuracy", "balanced_accuracy"},
}};

std::optional<double> parse_number(std::string_view text) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(out)) {
    return std::nullopt;
  }
  return out;
}

std::optional<std::int64_t> parse_count(std::string_view text) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

// Removes one layer of matching single or double quotes ("'gini'" -> "gini").
std::string unquote(std::string_view s) {
  std::string t = trim(s);
  if (t.size() >= 2 && (t.front() == '\'' || t.front() == '"') && t.back() == t.front()) {
    return t.substr(1, t.size() - 2);
  }
  return t;
}

std::string join_errors(const std::vector<std::string>& errors, std::string_view source) {
  std::string msg = std::string(source) + ": " + std::to_string(errors.size()) +
                    " invalid row(s)";
  const std::size_t shown = std::min<std::size_t>(errors.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) msg += "\n  " + errors[i];
  if (shown < errors.size()) msg += "\n  ...";
  return msg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

const MetricInfo& metric_info(std::string_view name) {
  for (const auto& m : kMetrics) {
    if (m.name == name) return m;
  }
  std::string known;
  for (const auto& m : kMetrics) known += (known.empty() ? "" : ", ") + m.name;
  throw ValidationError("unknown metric '" + std::string(name) + "' (known: " + known + ")");
}

double to_risk(const MetricInfo& metric, double value) {
  return metric.is_score ? metric.hi - value : value;
}

// --- RecordSet ------------------------------------------------------------------

RecordSet::RecordSet(ConfigurationSpace space, std::string metric,
                     std::vector<PerformanceRecord> records)
    : space_(std::move(space)), metric_(std::move(metric)), records_(std::move(records)) {
  const auto& info = metric_info(metric_);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    auto& r = records_[i];
    if (r.metric != metric_) {
      throw ValidationError("record " + std::to_string(i) + " has metric '" + r.metric +
                            "', set metric is '" + metric_ + "'");
    }
    if (!(r.value >= info.lo && r.value <= info.hi)) {
      throw ValidationError("record " + std::to_string(i) + ": " + metric_ + " value " +
                            csv::number(r.value) + " outside [" + csv::number(info.lo) + ", " +
                            csv::number(info.hi) + "]");
    }
    space_.validate(r.configuration);
    r.risk = to_risk(info, r.value);
    index_[r.dataset_id].push_back(i);
  }
}

std::vector<std::string> RecordSet::dataset_ids() const {
  std::vector<std::string> ids;
  ids.reserve(index_.size());
  for (const auto& [id, rows] : index_) ids.push_back(id);
  return ids;
}

// --- Records CSV ----------------------------------------------------------------

RecordSet parse_records(std::string_view text, const ConfigurationSpace& space,
                        std::string_view source) {
  const auto table = csv::parse(text, source);
  const std::string src(source);

  std::set<std::string> seen;
  for (const auto& h : table.header) {
    if (!seen.insert(h).second) {
      throw ValidationError(src + ":" + std::to_string(table.header_line) +
                            ": duplicate header column '" + h + "'");
    }
  }
  auto required = [&](std::string_view name) {
    auto c = table.column(name);
    if (!c) {
      throw ValidationError(src + ": missing required column '" + std::string(name) + "'");
    }
    return *c;
  };
  const auto dataset_col = required("dataset_id");
  const auto metric_col = required("metric");
  const auto value_col = required("value");

  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == dataset_col || c == metric_col || c == value_col) continue;
    if (space.find(table.header[c]) == nullptr) {
      throw ValidationError(src + ":" + std::to_string(table.header_line) +
                            ": unknown parameter column '" + table.header[c] + "' for space '" +
                            space.algorithm() + "'");
    }
  }
  std::vector<std::optional<std::size_t>> param_cols;
  for (const auto& d : space.domains()) {
    auto c = table.column(d.name());
    if (!c && !d.fixed_value()) {
      throw ValidationError(src + ": missing column for parameter '" + d.name() + "'");
    }
    param_cols.push_back(c);
  }

  std::vector<PerformanceRecord> records;
  std::vector<std::string> errors;
  std::string metric;
  const MetricInfo* info = nullptr;
  for (const auto& row : table.rows) {
    const std::string where = "line " + std::to_string(row.line) + ": ";
    try {
      PerformanceRecord r;
      r.dataset_id = row.cells[dataset_col];
      if (r.dataset_id.empty()) throw ValidationError("empty dataset_id");
      r.metric = row.cells[metric_col];
      if (metric.empty()) {
        metric = r.metric;
        info = &metric_info(metric);
      } else if (r.metric != metric) {
        throw ValidationError("metric '" + r.metric + "' differs from '" + metric +
                              "' used by earlier rows");
      }
      auto v = parse_number(row.cells[value_col]);
      if (!v) throw ValidationError("value '" + row.cells[value_col] + "' is not a number");
      if (*v < info->lo || *v > info->hi) {
        throw ValidationError(metric + " value " + row.cells[value_col] + " outside [" +
                              csv::number(info->lo) + ", " + csv::number(info->hi) + "]");
      }
      r.value = *v;
      std::vector<std::pair<std::string, Value>> entries;
      for (std::size_t k = 0; k < space.domains().size(); ++k) {
        const auto& d = space.domains()[k];
        if (!param_cols[k]) {
          entries.emplace_back(d.name(), *d.fixed_value());
          continue;
        }
        const auto& cell = row.cells[*param_cols[k]];
        if (cell.empty()) {
          throw ValidationError("parameter '" + d.name() + "': missing value");
        }
        entries.emplace_back(d.name(), d.parse(cell));
      }
      r.configuration = Configuration(std::move(entries));
      records.push_back(std::move(r));
    } catch (const ValidationError& e) {
      errors.push_back(where + e.what());
    }
  }
  if (!errors.empty()) throw ValidationError(join_errors(errors, source));
  if (records.empty()) throw DataError(src + ": no records");
  return RecordSet(space, metric, std::move(records));
}

RecordSet load_records(const std::filesystem::path& path, const ConfigurationSpace& space) {
  return parse_records(read_file(path), space, path.string());
}

std::string records_to_csv(const RecordSet& records) {
  std::ostringstream out;
  out << "dataset_id,metric,value";
  for (const auto& d : records.space().domains()) out << ',' << csv::escape(d.name());
  out << '\n';
  for (const auto& r : records.records()) {
    out << csv::escape(r.dataset_id) << ',' << csv::escape(r.metric) << ','
        << csv::number(r.value);
    for (const auto& [name, v] : r.configuration.entries()) {
      out << ',' << csv::escape(format_value(v));
    }
    out << '\n';
  }
  return out.str();
}

void write_records(const RecordSet& records, const std::filesystem::path& path,
                   std::string_view config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  if (!config_hash.empty()) out << "# config-hash: " << config_hash << '\n';
  out << records_to_csv(records);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// --- Metadata CSV ---------------------------------------------------------------

MetaTable parse_meta(std::string_view text, std::string_view source) {
  const auto table = csv::parse(text, source);
  const std::string src(source);
  const auto id_col = table.column("dataset_id");
  if (!id_col) throw ValidationError(src + ": missing required column 'dataset_id'");
  const auto p_col = table.column("n_features");
  if (!p_col) throw ValidationError(src + ": missing required column 'n_features'");
  const auto n_col = table.column("n_instances");

  MetaTable meta;
  for (const auto& row : table.rows) {
    const std::string where = src + ":" + std::to_string(row.line) + ": ";
    DatasetMeta m;
    m.dataset_id = row.cells[*id_col];
    if (m.dataset_id.empty()) throw ValidationError(where + "empty dataset_id");
    auto p = parse_count(row.cells[*p_col]);
    if (!p || *p < 1) {
      throw ValidationError(where + "n_features must be a positive integer (got '" +
                            row.cells[*p_col] + "')");
    }
    m.n_features = *p;
    if (n_col && !row.cells[*n_col].empty()) {
      auto n = parse_count(row.cells[*n_col]);
      if (!n || *n < 1) {
        throw ValidationError(where + "n_instances must be a positive integer (got '" +
                              row.cells[*n_col] + "')");
      }
      m.n_instances = *n;
    }
    if (!meta.emplace(m.dataset_id, m).second) {
      throw ValidationError(where + "duplicate dataset_id '" + m.dataset_id + "'");
    }
  }
  return meta;
}

MetaTable load_meta(const std::filesystem::path& path) {
  return parse_meta(read_file(path), path.string());
}

// --- OpenML export conversion ---------------------------------------------------

RecordSet parse_openml(std::string_view text, const ConfigurationSpace& space,
                       std::string_view metric, std::string_view source) {
  const auto table = csv::parse(text, source);
  const std::string src(source);
  const auto& info = metric_info(metric);

  std::optional<std::size_t> dataset_col;
  for (auto name : {"dataset_id", "task_id", "data_id"}) {
    if ((dataset_col = table.column(name))) break;
  }
  if (!dataset_col) {
    throw ValidationError(src + ": no dataset column (task_id, data_id, or dataset_id)");
  }
  auto function_col = table.column("function");
  if (!function_col) function_col = table.column("metric");
  if (!function_col) throw ValidationError(src + ": no 'function' column");
  const auto value_col = table.column("value");
  if (!value_col) throw ValidationError(src + ": no 'value' column");

  auto ends_with = [](std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
  };
  std::vector<std::optional<std::size_t>> param_cols;
  for (const auto& d : space.domains()) {
    std::optional<std::size_t> found = table.column(d.name());
    for (std::size_t c = 0; !found && c < table.header.size(); ++c) {
      const auto& h = table.header[c];
      if (ends_with(h, "_" + d.name()) || ends_with(h, "." + d.name())) found = c;
    }
    if (!found && !d.fixed_value()) {
      throw ValidationError(src + ": no column for parameter '" + d.name() + "'");
    }
    param_cols.push_back(found);
  }

  auto matches_metric = [&](std::string_view function) {
    if (function == metric) return true;
    for (const auto& [openml, local] : kOpenmlAliases) {
      if (function == openml && local == metric) return true;
    }
    return false;
  };

  std::vector<PerformanceRecord> records;
  std::vector<std::string> errors;
  for (const auto& row : table.rows) {
    if (!matches_metric(unquote(row.cells[*function_col]))) continue;
    try {
      PerformanceRecord r;
      r.dataset_id = unquote(row.cells[*dataset_col]);
      r.metric = info.name;
      auto v = parse_number(unquote(row.cells[*value_col]));
      if (!v || *v < info.lo || *v > info.hi) {
        throw ValidationError("value '" + row.cells[*value_col] + "' invalid for " + info.name);
      }
      r.value = *v;
      std::vector<std::pair<std::string, Value>> entries;
      for (std::size_t k = 0; k < space.domains().size(); ++k) {
        const auto& d = space.domains()[k];
        if (d.fixed_value()) {
          entries.emplace_back(d.name(), *d.fixed_value());
          continue;
        }
        const auto cell = unquote(row.cells[*param_cols[k]]);
        if (cell.empty() || cell == "None" || cell == "null") {
          throw ValidationError("parameter '" + d.name() + "': missing value");
        }
        entries.emplace_back(d.name(), d.parse(cell));
      }
      r.configuration = Configuration(std::move(entries));
      records.push_back(std::move(r));
    } catch (const ValidationError& e) {
      errors.push_back("line " + std::to_string(row.line) + ": " + e.what());
    }
  }
  if (!errors.empty()) throw ValidationError(join_errors(errors, source));
  if (records.empty()) {
    throw DataError(src + ": no evaluations for metric '" + std::string(metric) + "'");
  }
  return RecordSet(space, info.name, std::move(records));
}

RecordSet convert_openml(const std::filesystem::path& path, const ConfigurationSpace& space,
                         std::string_view metric) {
  return parse_openml(read_file(path), space, metric, path.string());
}

}  // namespace tunerisk
