#include "tunerisk/risk.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "tunerisk/csv.hpp"
#include "tunerisk/error.hpp"

namespace tunerisk {

namespace {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs, Deviation deviation) {
  const auto n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double denom = deviation == Deviation::kSample ? n - 1.0 : n;
  return {mean, denom > 0.0 ? std::sqrt(ss / denom) : 0.0};
}

void check(const RiskPair& p) {
  if (!std::isfinite(p.fixed_risk) || !std::isfinite(p.nonfixed_risk) || p.fixed_risk < 0.0 ||
      p.nonfixed_risk < 0.0) {
    throw DataError("pair (" + p.dataset_id + ", seed " + std::to_string(p.seed_index) +
                    ") has invalid risks " + csv::number(p.fixed_risk) + ", " +
                    csv::number(p.nonfixed_risk));
  }
}

}  // namespace

double tuning_risk(const RiskPair& pair) { return pair.fixed_risk - pair.nonfixed_risk; }

std::optional<double> relative_tuning_risk(const RiskPair& pair) {
  if (pair.nonfixed_risk == 0.0) return std::nullopt;
  return (pair.fixed_risk - pair.nonfixed_risk) / pair.nonfixed_risk;
}

std::map<std::string, std::string> zero_risk_datasets(std::span<const RiskPair> pairs) {
  std::map<std::string, std::string> out;
  for (const auto& p : pairs) {
    if (p.nonfixed_risk == 0.0) {
      out.emplace(p.dataset_id, "zero non-fixed risk at seed " + std::to_string(p.seed_index));
    }
  }
  return out;
}

TuningRiskSummary aggregate(std::span<const RiskPair> pairs, std::string_view param_name,
                            const AggregateOptions& options) {
  if (pairs.empty()) throw DataError("no pairs to aggregate");
  std::vector<const RiskPair*> ordered;
  ordered.reserve(pairs.size());
  for (const auto& p : pairs) {
    check(p);
    ordered.push_back(&p);
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const RiskPair* a, const RiskPair* b) {
    if (a->dataset_id != b->dataset_id) return a->dataset_id < b->dataset_id;
    return a->seed_index < b->seed_index;
  });

  const auto dropped = zero_risk_datasets(pairs);
  TuningRiskSummary out;
  out.param_name = std::string(param_name);
  out.n_pairs = pairs.size();

  std::vector<double> d;
  std::vector<double> d_rel;
  for (const auto* p : ordered) {
    d.push_back(tuning_risk(*p));
    if (auto it = dropped.find(p->dataset_id); it != dropped.end()) {
      out.excluded.push_back({p->dataset_id, p->seed_index, it->second});
      continue;
    }
    d_rel.push_back(*relative_tuning_risk(*p));
  }
  if (d_rel.empty()) {
    throw DataError("relative tuning risk of '" + out.param_name +
                    "' is undefined: every dataset has a zero non-fixed risk");
  }
  const auto abs_stats = mean_sd(d, options.deviation);
  const auto rel_stats = mean_sd(d_rel, options.deviation);
  out.d = abs_stats.mean;
  out.s = abs_stats.sd;
  out.d_rel = rel_stats.mean;
  out.s_rel = rel_stats.sd;
  out.n_pairs_used = d_rel.size();
  return out;
}

std::map<std::string, std::vector<RiskPair>> parse_pairs(std::string_view text,
                                                         std::string_view source) {
  const auto table = csv::parse(text, source);
  const std::string src(source);
  auto col = [&](std::string_view name) {
    auto c = table.column(name);
    if (!c) throw ValidationError(src + ": missing required column '" + std::string(name) + "'");
    return *c;
  };
  const auto param_c = table.column("param");
  const auto dataset_c = col("dataset_id");
  const auto seed_c = col("seed");
  const auto fixed_c = col("fixed_risk");
  const auto nonfixed_c = col("nonfixed_risk");

  auto number = [&](const csv::Row& row, std::size_t c) {
    double v = 0.0;
    const auto& cell = row.cells[c];
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v) || v < 0.0) {
      throw ValidationError(src + ":" + std::to_string(row.line) + ": '" + table.header[c] +
                            "' must be a non-negative number (got '" + cell + "')");
    }
    return v;
  };

  std::map<std::string, std::vector<RiskPair>> out;
  std::set<std::tuple<std::string, std::string, std::int64_t>> seen;
  for (const auto& row : table.rows) {
    RiskPair p;
    const std::string param = param_c ? row.cells[*param_c] : std::string();
    p.dataset_id = row.cells[dataset_c];
    const auto& seed = row.cells[seed_c];
    auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), p.seed_index);
    if (ec != std::errc{} || ptr != seed.data() + seed.size() || p.seed_index < 0) {
      throw ValidationError(src + ":" + std::to_string(row.line) +
                            ": seed must be a non-negative integer (got '" + seed + "')");
    }
    p.fixed_risk = number(row, fixed_c);
    p.nonfixed_risk = number(row, nonfixed_c);
    if (!seen.emplace(param, p.dataset_id, p.seed_index).second) {
      throw ValidationError(src + ":" + std::to_string(row.line) + ": duplicate pair (" + param +
                            ", " + p.dataset_id + ", seed " + seed + ")");
    }
    out[param].push_back(std::move(p));
  }
  return out;
}

std::map<std::string, std::vector<RiskPair>> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pairs(buf.str(), path.string());
}

}  // namespace tunerisk
