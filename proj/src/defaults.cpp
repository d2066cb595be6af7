#include "tunerisk/defaults.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tunerisk/error.hpp"

namespace tunerisk {

namespace {

struct PooledValue {
  Value value;
  double risk = 0.0;
};

std::vector<PooledValue> pool_values(const TopNSubset& top, std::string_view param,
                                     std::string_view held_out) {
  std::vector<PooledValue> pool;
  for (const auto& [dataset, entries] : top.entries) {
    if (dataset == held_out) continue;
    for (const auto& e : entries) pool.push_back({e.configuration.at(param), e.risk});
  }
  return pool;
}

bool uses_bins(const HyperparameterDomain& d) {
  if (d.kind() == ParamKind::kContinuous) return true;
  return d.kind() == ParamKind::kInteger && d.integer_cardinality() > kDiscreteIntegerLimit;
}

// Orders values for the final tie break: numbers numerically, categories by
// canonical text.
bool canonical_less(const HyperparameterDomain& d, const Value& a, const Value& b) {
  if (d.is_numeric()) return d.to_number(a) < d.to_number(b);
  return format_value(a) < format_value(b);
}

struct Tally {
  Value value;
  std::size_t count = 0;
  double risk_sum = 0.0;
  [[nodiscard]] double mean_risk() const { return risk_sum / static_cast<double>(count); }
};

DefaultAssignment mode_of(const HyperparameterDomain& d, const std::vector<PooledValue>& pool) {
  std::vector<Tally> tallies;
  for (const auto& pv : pool) {
    auto it = std::find_if(tallies.begin(), tallies.end(),
                           [&](const Tally& t) { return t.value == pv.value; });
    if (it == tallies.end()) {
      tallies.push_back({pv.value, 1, pv.risk});
    } else {
      ++it->count;
      it->risk_sum += pv.risk;
    }
  }
  // Summation order above follows pool order, which is deterministic.
  const Tally* best = &tallies.front();
  for (const auto& t : tallies) {
    if (t.count != best->count) {
      if (t.count > best->count) best = &t;
      continue;
    }
    const double tm = t.mean_risk();
    const double bm = best->mean_risk();
    if (tm < bm || (tm == bm && canonical_less(d, t.value, best->value))) best = &t;
  }
  DefaultAssignment out;
  out.param_name = d.name();
  out.value = best->value;
  out.support = best->count;
  out.pool_size = pool.size();
  out.mean_risk = best->mean_risk();
  return out;
}

Value representative(const HyperparameterDomain& d, double transformed_mid) {
  const double v = std::clamp(from_scale_space(transformed_mid, d.scale()), d.lo(), d.hi());
  if (d.kind() == ParamKind::kInteger) {
    return std::clamp<std::int64_t>(std::llround(v), static_cast<std::int64_t>(d.lo()),
                                    static_cast<std::int64_t>(d.hi()));
  }
  return v;
}

DefaultAssignment binned_mode(const HyperparameterDomain& d, const std::vector<PooledValue>& pool) {
  std::vector<double> t;
  t.reserve(pool.size());
  for (const auto& pv : pool) t.push_back(to_scale_space(d.to_number(pv.value), d.scale()));
  const auto bins = make_bins(t, d.scale());
  if (!bins) return mode_of(d, pool);  // IQR == 0: treat as discrete

  std::vector<std::size_t> counts(bins->count, 0);
  std::vector<double> risk_sums(bins->count, 0.0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto k = bins->index_of(t[i]);
    ++counts[k];
    risk_sums[k] += pool[i].risk;
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < bins->count; ++k) {
    if (counts[k] > counts[best]) {
      best = k;
    } else if (counts[k] == counts[best] && counts[k] > 0) {
      const double mk = risk_sums[k] / static_cast<double>(counts[k]);
      const double mb = risk_sums[best] / static_cast<double>(counts[best]);
      if (mk < mb) best = k;  // equal means keep the lower bin
    }
  }
  DefaultAssignment out;
  out.param_name = d.name();
  out.value = representative(d, bins->midpoint(best));
  out.support = counts[best];
  out.pool_size = pool.size();
  out.mean_risk = risk_sums[best] / static_cast<double>(counts[best]);
  const double edge_lo = bins->lo + static_cast<double>(best) * bins->width;
  out.bin = std::pair{from_scale_space(edge_lo, d.scale()),
                      from_scale_space(edge_lo + bins->width, d.scale())};
  return out;
}

}  // namespace

std::size_t TopNSubset::total() const noexcept {
  std::size_t n_total = 0;
  for (const auto& [id, list] : entries) n_total += list.size();
  return n_total;
}

TopNSubset top_n(const RecordSet& records, std::size_t n) {
  if (n == 0) throw DataError("top-n requires n >= 1");
  TopNSubset top;
  top.n = n;
  for (const auto& [dataset, rows] : records.index()) {
    if (rows.size() < n) {
      throw DataError("dataset '" + dataset + "' has " + std::to_string(rows.size()) +
                      " records, fewer than n = " + std::to_string(n));
    }
    struct Keyed {
      double risk;
      std::string key;
      std::size_t row;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(rows.size());
    for (auto r : rows) {
      const auto& rec = records.records()[r];
      keyed.push_back({rec.risk, rec.configuration.serialize(), r});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
      if (a.risk != b.risk) return a.risk < b.risk;
      if (a.key != b.key) return a.key < b.key;
      return a.row < b.row;
    });
    auto& list = top.entries[dataset];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& rec = records.records()[keyed[i].row];
      list.push_back({rec.configuration, rec.risk});
    }
  }
  return top;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double fd_bin_width(std::span<const double> values) {
  if (values.empty()) throw DataError("Freedman-Diaconis width of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  if (iqr <= 0.0) return 0.0;
  return 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
}

double to_scale_space(double v, Scale scale) { return scale == Scale::kLog ? std::log(v) : v; }
double from_scale_space(double t, Scale scale) { return scale == Scale::kLog ? std::exp(t) : t; }

std::vector<double> BinSpec::edges() const {
  std::vector<double> e(count + 1);
  for (std::size_t k = 0; k <= count; ++k) e[k] = lo + static_cast<double>(k) * width;
  return e;
}

std::size_t BinSpec::index_of(double transformed) const {
  const double pos = std::floor((transformed - lo) / width);
  if (pos <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(pos), count - 1);
}

std::optional<BinSpec> make_bins(std::span<const double> transformed, Scale scale) {
  const double width = fd_bin_width(transformed);
  if (width <= 0.0) return std::nullopt;
  const auto [mn, mx] = std::minmax_element(transformed.begin(), transformed.end());
  BinSpec spec;
  spec.lo = *mn;
  spec.hi = *mx;
  spec.width = width;
  spec.scale = scale;
  spec.count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((*mx - *mn) / width)));
  return spec;
}

DefaultAssignment derive_default(const TopNSubset& top, std::string_view param,
                                 std::string_view held_out, const ConfigurationSpace& space) {
  const auto& d = space.at(param);
  std::size_t others = 0;
  for (const auto& [dataset, entries] : top.entries) {
    if (dataset != held_out) ++others;
  }
  if (others < 2) {
    throw DataError("default for '" + std::string(param) + "' with '" + std::string(held_out) +
                    "' held out needs at least 2 other datasets, found " +
                    std::to_string(others));
  }
  const auto pool = pool_values(top, param, held_out);
  if (pool.empty()) {
    throw DataError("empty top-n pool for '" + std::string(param) + "' with '" +
                    std::string(held_out) + "' held out");
  }
  auto out = uses_bins(d) ? binned_mode(d, pool) : mode_of(d, pool);
  out.held_out_dataset = std::string(held_out);
  return out;
}

std::vector<DefaultAssignment> derive_all_defaults_serial(const TopNSubset& top,
                                                          std::string_view param,
                                                          const ConfigurationSpace& space) {
  std::vector<DefaultAssignment> out;
  out.reserve(top.entries.size());
  for (const auto& [dataset, entries] : top.entries) {
    out.push_back(derive_default(top, param, dataset, space));
  }
  return out;
}

std::vector<DefaultAssignment> derive_all_defaults(const TopNSubset& top, std::string_view param,
                                                   const ConfigurationSpace& space) {
  std::vector<std::string> ids;
  for (const auto& [dataset, entries] : top.entries) ids.push_back(dataset);
  (void)space.at(param);
  std::vector<std::optional<DefaultAssignment>> slots(ids.size());
  std::vector<std::string> failures(ids.size());
  const auto count = static_cast<std::int64_t>(ids.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      slots[i] = derive_default(top, param, ids[i], space);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  std::vector<DefaultAssignment> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!failures[i].empty()) throw DataError(failures[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

std::vector<HistogramBin> top_n_histogram(const TopNSubset& top, std::string_view param,
                                          const ConfigurationSpace& space) {
  const auto& d = space.at(param);
  const auto pool = pool_values(top, param, {});
  std::vector<HistogramBin> out;
  if (pool.empty()) return out;

  std::optional<BinSpec> bins;
  std::vector<double> t;
  if (uses_bins(d)) {
    for (const auto& pv : pool) t.push_back(to_scale_space(d.to_number(pv.value), d.scale()));
    bins = make_bins(t, d.scale());
  }
  if (!bins) {
    std::vector<Tally> tallies;
    for (const auto& pv : pool) {
      auto it = std::find_if(tallies.begin(), tallies.end(),
                             [&](const Tally& x) { return x.value == pv.value; });
      if (it == tallies.end()) {
        tallies.push_back({pv.value, 1, 0.0});
      } else {
        ++it->count;
      }
    }
    std::sort(tallies.begin(), tallies.end(), [&](const Tally& a, const Tally& b) {
      return canonical_less(d, a.value, b.value);
    });
    for (const auto& x : tallies) {
      const double num = d.to_number(x.value);
      out.push_back({format_value(x.value), num, num, x.count});
    }
    return out;
  }
  std::vector<std::size_t> counts(bins->count, 0);
  for (double v : t) ++counts[bins->index_of(v)];
  const auto edges = bins->edges();
  for (std::size_t k = 0; k < bins->count; ++k) {
    out.push_back({"", from_scale_space(edges[k], d.scale()),
                   from_scale_space(edges[k + 1], d.scale()), counts[k]});
  }
  return out;
}

}  // namespace tunerisk
