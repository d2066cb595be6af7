#include "tunerisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "tunerisk/csv.hpp"
#include "tunerisk/error.hpp"

namespace tunerisk {

SignedRankStatistic signed_rank_statistic(std::span<const double> w) {
  std::vector<double> nonzero;
  nonzero.reserve(w.size());
  SignedRankStatistic out;
  for (double x : w) {
    if (!std::isfinite(x)) throw DataError("signed-rank test: non-finite difference");
    if (x == 0.0) {
      ++out.n_zero;
    } else {
      nonzero.push_back(x);
    }
  }
  if (nonzero.empty()) throw DataError("signed-rank test: all differences are zero");
  if (nonzero.size() < kMinSignedRankObservations) {
    throw DataError("signed-rank test: insufficient observations (" +
                    std::to_string(nonzero.size()) + " non-zero differences, need at least " +
                    std::to_string(kMinSignedRankObservations) + ")");
  }

  std::vector<std::size_t> order(nonzero.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(nonzero[a]) < std::fabs(nonzero[b]);
  });

  // Ranks are multiples of 0.5, so the sums below are exact in binary64.
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    const double mag = std::fabs(nonzero[order[i]]);
    while (j < order.size() && std::fabs(nonzero[order[j]]) == mag) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (nonzero[order[k]] < 0.0) {
        out.negative_rank_sum += rank;
      } else {
        out.positive_rank_sum += rank;
      }
    }
    i = j;
  }

  out.n = nonzero.size();
  const auto n = static_cast<double>(out.n);
  const double mean = n * (n + 1.0) / 4.0;
  const double sd = std::sqrt(n * (n + 1.0) * (2.0 * n + 1.0) / 24.0);
  out.z = (out.negative_rank_sum - mean) / sd;
  return out;
}

double normal_upper_tail(double z) {
  // erfc keeps full relative precision deep in the upper tail.
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

NonInferiorityResult noninferiority_test(std::span<const PairedObservation> obs, double delta,
                                         std::string_view param_name) {
  if (!std::isfinite(delta)) throw DataError("non-inferiority margin must be finite");
  std::vector<double> w;
  w.reserve(obs.size());
  for (const auto& o : obs) {
    if (!(o.nonfixed_risk > 0.0) || !std::isfinite(o.fixed_risk)) {
      throw DataError("observation (" + o.dataset_id + ", seed " + std::to_string(o.seed_index) +
                      ") needs a positive non-fixed risk, got " + csv::number(o.nonfixed_risk));
    }
    w.push_back((o.fixed_risk - o.nonfixed_risk) / o.nonfixed_risk - delta);
  }
  const auto stat = signed_rank_statistic(w);
  NonInferiorityResult r;
  r.param_name = std::string(param_name);
  r.n = stat.n;
  r.n_zero = stat.n_zero;
  r.s_nr = stat.negative_rank_sum;
  r.z = stat.z;
  r.p = normal_upper_tail(stat.z);
  r.delta = delta;
  return r;
}

std::vector<HolmDecision> holm_bonferroni(std::span<const std::pair<std::string, double>> pvalues,
                                          double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  const std::size_t m = pvalues.size();
  std::vector<HolmDecision> out;
  out.reserve(m);
  for (const auto& [name, p] : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DataError("p-value of '" + name + "' outside [0, 1]: " + csv::number(p));
    }
    out.push_back({name, p, 0.0, false});
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out[a].p < out[b].p; });
  bool stopped = false;
  for (std::size_t k = 0; k < m; ++k) {
    auto& h = out[order[k]];
    h.threshold = alpha / static_cast<double>(m - k);
    if (!stopped && h.p <= h.threshold) {
      h.rejected = true;
    } else {
      stopped = true;
    }
  }
  return out;
}

void apply_holm(std::vector<NonInferiorityResult>& results, double alpha) {
  std::vector<std::pair<std::string, double>> ps;
  ps.reserve(results.size());
  for (const auto& r : results) ps.emplace_back(r.param_name, r.p);
  const auto decisions = holm_bonferroni(ps, alpha);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].rejected = decisions[i].rejected;
}

std::vector<PairedObservation> observations_from_pairs(std::span<const RiskPair> pairs,
                                                       std::vector<std::string>* dropped_datasets) {
  const auto dropped = zero_risk_datasets(pairs);
  if (dropped_datasets != nullptr) {
    dropped_datasets->clear();
    for (const auto& [id, reason] : dropped) dropped_datasets->push_back(id);
  }
  std::vector<PairedObservation> out;
  for (const auto& p : pairs) {
    if (dropped.contains(p.dataset_id)) continue;
    out.push_back({p.fixed_risk, p.nonfixed_risk, p.dataset_id, p.seed_index});
  }
  return out;
}

std::vector<PairedObservation> collapse_seeds(std::span<const PairedObservation> obs) {
  struct Acc {
    double fixed = 0.0;
    double nonfixed = 0.0;
    std::size_t count = 0;
  };
  std::map<std::string, Acc> acc;
  std::vector<const PairedObservation*> ordered;
  for (const auto& o : obs) ordered.push_back(&o);
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    if (a->dataset_id != b->dataset_id) return a->dataset_id < b->dataset_id;
    return a->seed_index < b->seed_index;
  });
  for (const auto* o : ordered) {
    auto& a = acc[o->dataset_id];
    a.fixed += o->fixed_risk;
    a.nonfixed += o->nonfixed_risk;
    ++a.count;
  }
  std::vector<PairedObservation> out;
  for (const auto& [id, a] : acc) {
    const auto n = static_cast<double>(a.count);
    out.push_back({a.fixed / n, a.nonfixed / n, id, 0});
  }
  return out;
}

}  // namespace tunerisk
