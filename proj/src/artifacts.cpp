#include "tunerisk/artifacts.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tunerisk/csv.hpp"
#include "tunerisk/error.hpp"
#include "tunerisk/rng.hpp"

namespace tunerisk {

namespace {

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string count(std::size_t n) { return std::to_string(n); }

}  // namespace

std::string config_hash(const nlohmann::json& config) { return hex(rng::fnv1a64(config.dump())); }

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex(rng::fnv1a64(buf.str()));
}

void write_defaults_csv(const std::filesystem::path& path, std::string_view hash,
                        std::span<const DefaultAssignment> defaults) {
  csv::Writer w(path, hash,
                {"param", "held_out_dataset", "value", "support", "pool_size", "mean_risk",
                 "bin_lo", "bin_hi"});
  for (const auto& d : defaults) {
    w.row({d.param_name, d.held_out_dataset, format_value(d.value), count(d.support),
           count(d.pool_size), csv::number(d.mean_risk),
           d.bin ? csv::number(d.bin->first) : "", d.bin ? csv::number(d.bin->second) : ""});
  }
}

void write_fit_json(const std::filesystem::path& path, std::string_view hash,
                    std::string_view param, const FittedFunction& fit) {
  nlohmann::ordered_json j;
  j["config_hash"] = hash;
  j["param"] = param;
  j["function"] = fit.describe();
  const auto body = fit.to_json();
  for (const auto& [k, v] : body.items()) j[k] = v;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_histogram_csv(const std::filesystem::path& path, std::string_view hash,
                         std::span<const ParamHistogram> histograms) {
  csv::Writer w(path, hash, {"param", "label", "lo", "hi", "count"});
  for (const auto& h : histograms) {
    for (const auto& b : h.bins) {
      const bool numeric = b.label.empty();
      w.row({h.param, b.label, numeric ? csv::number(b.lo) : "", numeric ? csv::number(b.hi) : "",
             count(b.count)});
    }
  }
}

void write_risk_summary_csv(const std::filesystem::path& path, std::string_view hash,
                            std::span<const TuningRiskSummary> summaries) {
  csv::Writer w(path, hash,
                {"param", "d_i", "s_i", "d_i_rel", "s_i_rel", "n_used", "n_excluded"});
  for (const auto& s : summaries) {
    w.row({s.param_name, csv::number(s.d), csv::number(s.s), csv::number(s.d_rel),
           csv::number(s.s_rel), count(s.n_pairs_used), count(s.excluded.size())});
  }
}

void write_risk_pairs_csv(const std::filesystem::path& path, std::string_view hash,
                          const std::map<std::string, std::vector<RiskPair>>& pairs) {
  csv::Writer w(path, hash,
                {"param", "dataset_id", "seed", "fixed_risk", "nonfixed_risk", "d", "d_rel"});
  for (const auto& [param, list] : pairs) {
    for (const auto& p : list) {
      const auto rel = relative_tuning_risk(p);
      w.row({param, p.dataset_id, std::to_string(p.seed_index), csv::number(p.fixed_risk),
             csv::number(p.nonfixed_risk), csv::number(tuning_risk(p)),
             rel ? csv::number(*rel) : ""});
    }
  }
}

std::string decision_text(const NonInferiorityResult& r) {
  if (!r.rejected) return "untested";
  return *r.rejected ? "rejected" : "not rejected";
}

void write_test_csv(const std::filesystem::path& path, std::string_view hash,
                    std::span<const NonInferiorityResult> results) {
  csv::Writer w(path, hash, {"param", "N", "s_nr", "z", "p", "decision"});
  for (const auto& r : results) {
    w.row({r.param_name, count(r.n), csv::number(r.s_nr), csv::number(r.z), csv::number(r.p),
           decision_text(r)});
  }
}

void write_experiment(const std::filesystem::path& dir, std::string_view hash,
                      const ExperimentPlan& plan, const ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  {
    csv::Writer w(dir / "pairs.csv", hash,
                  {"param", "dataset_id", "seed", "fixed_risk", "nonfixed_risk"});
    for (const auto& p : result.pairs) {
      w.row({plan.param, p.dataset_id, std::to_string(p.seed_index), csv::number(p.fixed_risk),
             csv::number(p.nonfixed_risk)});
    }
  }
  {
    csv::Writer w(dir / "traces.csv", hash,
                  {"dataset", "condition", "seed", "fold", "iteration", "value"});
    for (const auto& t : result.traces) {
      const std::string cond(to_string(t.condition));
      const auto seed = std::to_string(t.seed_index);
      for (std::size_t f = 0; f < t.folds.size(); ++f) {
        const auto fold = std::to_string(f);
        const auto& acc = t.folds[f].validation_accuracy;
        for (std::size_t i = 0; i < acc.size(); ++i) {
          w.row({t.dataset_id, cond, seed, fold, std::to_string(i), csv::number(acc[i])});
        }
      }
    }
  }
  {
    csv::Writer w(dir / "winners.csv", hash,
                  {"dataset", "condition", "seed", "fold", "iteration", "test_risk",
                   "configuration"});
    for (const auto& t : result.traces) {
      for (std::size_t f = 0; f < t.folds.size(); ++f) {
        const auto& fold = t.folds[f];
        w.row({t.dataset_id, std::string(to_string(t.condition)), std::to_string(t.seed_index),
               std::to_string(f), std::to_string(fold.chosen_iteration),
               csv::number(fold.test_risk), fold.chosen.serialize()});
      }
    }
  }
  auto write_curves = [&](const std::filesystem::path& path,
                          const std::vector<ConditionCurve>& curves) {
    csv::Writer w(path, hash, {"iteration", "condition", "mean", "sd"});
    for (const auto& c : curves) {
      for (std::size_t i = 0; i < c.mean.size(); ++i) {
        w.row({std::to_string(i), std::string(to_string(c.condition)), csv::number(c.mean[i]),
               csv::number(c.sd[i])});
      }
    }
  };
  write_curves(dir / "curves.csv", accuracy_curves(result.traces));
  write_curves(dir / "ranks.csv", rank_curves(result.traces));
}

void write_summary_csv(const std::filesystem::path& path, std::string_view hash,
                       std::span<const SummaryRow> rows) {
  csv::Writer w(path, hash,
                {"param", "default", "d_i", "s_i", "d_i_rel", "s_i_rel", "N", "z", "p",
                 "decision"});
  for (const auto& r : rows) {
    w.row({r.param, r.default_text, csv::number(r.risk.d), csv::number(r.risk.s),
           csv::number(r.risk.d_rel), csv::number(r.risk.s_rel), count(r.test.n),
           csv::number(r.test.z), csv::number(r.test.p), decision_text(r.test)});
  }
}

}  // namespace tunerisk
