#include "tunerisk/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>

#include "tunerisk/csv.hpp"
#include "tunerisk/defaults.hpp"
#include "tunerisk/error.hpp"
#include "tunerisk/rng.hpp"
#include "tunerisk/stats.hpp"

namespace tunerisk {

namespace {

constexpr std::uint64_t kSimulateTag = 0x51e0;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() ? base / path : path;
}

// Categorical defaults are summarized by their most common value, numeric
// ones by the median and range over held-out datasets.
std::string default_summary(const std::vector<DefaultAssignment>& defaults,
                            const HyperparameterDomain& domain) {
  std::map<std::string, std::size_t> counts;
  for (const auto& d : defaults) ++counts[format_value(d.value)];
  if (counts.size() == 1) return counts.begin()->first;
  if (domain.is_categorical()) {
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    return best->first + " (" + std::to_string(best->second) + "/" +
           std::to_string(defaults.size()) + " datasets)";
  }
  std::vector<double> xs;
  for (const auto& d : defaults) xs.push_back(domain.to_number(d.value));
  std::sort(xs.begin(), xs.end());
  return "median " + csv::number(quantile_sorted(xs, 0.5)) + " in [" + csv::number(xs.front()) +
         ", " + csv::number(xs.back()) + "]";
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir) {
  try {
    PipelineConfig c;
    c.source = j;
    c.records = resolve(base_dir, j.at("records").get<std::string>());
    c.space = resolve(base_dir, j.at("space").get<std::string>());
    if (j.contains("meta")) c.meta = resolve(base_dir, j.at("meta").get<std::string>());
    if (j.contains("metric")) c.metric = j.at("metric").get<std::string>();
    const auto n = j.value("n", std::int64_t{10});
    if (n < 1) throw ConfigError("n must be >= 1");
    c.n = static_cast<std::size_t>(n);
    c.delta = j.value("delta", 0.01);
    c.alpha = j.value("alpha", 0.05);
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    c.params = j.value("params", std::vector<std::string>{});
    if (j.contains("fits")) {
      for (const auto& [param, f] : j.at("fits").items()) {
        FitSetting s;
        s.family = parse_family(f.at("family").get<std::string>());
        s.relative_to_p = f.value("relative_to_p", false);
        c.fits[param] = s;
      }
    }
    c.surrogates = j.at("surrogates");
    if (j.contains("cv")) {
      const auto& cv = j.at("cv");
      c.cv.outer_folds = cv.value("outer_folds", c.cv.outer_folds);
      c.cv.inner_folds = cv.value("inner_folds", c.cv.inner_folds);
      c.cv.search_iterations = cv.value("iterations", c.cv.search_iterations);
      c.cv.seeds = cv.value("seeds", c.cv.seeds);
    }
    c.cv.validate();
    c.seed = j.value("seed", std::uint64_t{0});
    const auto sd = j.value("deviation", std::string("population"));
    if (sd != "population" && sd != "sample") {
      throw ConfigError("deviation must be 'population' or 'sample'");
    }
    c.aggregate.deviation = sd == "sample" ? Deviation::kSample : Deviation::kPopulation;
    if (!c.fits.empty() && !c.meta) throw ConfigError("fits need a 'meta' file");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed pipeline config: ") + e.what());
  }
}

std::vector<std::string> free_parameters(const ConfigurationSpace& space) {
  std::vector<std::string> out;
  for (const auto& d : space.domains()) {
    if (d.fixed_value()) continue;
    if (d.is_categorical() && d.choices().size() < 2) continue;
    out.push_back(d.name());
  }
  return out;
}

PipelineReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir,
                            const ExecutionOptions& options) {
  const auto space = load_space(config.space);
  const auto records = load_records(config.records, space);
  if (config.metric && *config.metric != records.metric()) {
    throw ConfigError("records use metric '" + records.metric() + "', config expects '" +
                      *config.metric + "'");
  }
  MetaTable meta;
  if (config.meta) meta = load_meta(*config.meta);

  nlohmann::json inputs = {{"records", file_digest(config.records)},
                           {"space", file_digest(config.space)}};
  if (config.meta) inputs["meta"] = file_digest(*config.meta);
  PipelineReport report;
  report.hash = config_hash({{"config", config.source}, {"inputs", inputs}});
  const auto& hash = report.hash;

  const auto surrogates = surrogates_from_json(config.surrogates, config.seed);
  for (const auto& s : surrogates) {
    auto it = meta.find(s.dataset_id);
    if (it != meta.end() && it->second.n_features != s.meta.n_features) {
      throw ConfigError("surrogate '" + s.dataset_id + "' has n_features " +
                        std::to_string(s.meta.n_features) + " but the metadata says " +
                        std::to_string(it->second.n_features));
    }
  }

  auto params = config.params.empty() ? free_parameters(space) : config.params;
  if (params.empty()) throw ConfigError("no parameters to study");
  for (const auto& p : params) (void)space.at(p);
  for (const auto& [p, f] : config.fits) {
    if (std::find(params.begin(), params.end(), p) == params.end()) {
      throw ConfigError("fit given for '" + p + "', which is not studied");
    }
  }

  ensure_dir(out_dir);
  const auto top = top_n(records, config.n);
  const auto record_ids = records.dataset_ids();
  const std::set<std::string> known(record_ids.begin(), record_ids.end());

  std::vector<DefaultAssignment> all_defaults;
  std::vector<ParamHistogram> histograms;
  std::map<std::string, std::vector<RiskPair>> all_pairs;
  std::vector<TuningRiskSummary> summaries;
  std::vector<NonInferiorityResult> tests;

  for (const auto& param : params) {
    const auto defaults = derive_all_defaults(top, param, space);
    all_defaults.insert(all_defaults.end(), defaults.begin(), defaults.end());
    histograms.push_back({param, top_n_histogram(top, param, space)});

    ExperimentPlan plan;
    plan.name = param;
    plan.space = space;
    plan.param = param;
    plan.surrogates = surrogates;
    plan.cv = config.cv;
    plan.root_seed = config.seed;

    std::string default_text;
    if (auto f = config.fits.find(param); f != config.fits.end()) {
      MetaFitOptions opts;
      opts.values_times_p = f->second.relative_to_p;
      const auto fit = fit_meta_function(top, param, meta, f->second.family, space, opts);
      write_fit_json(out_dir / ("fit_" + param + ".json"), hash, param, fit);
      plan.default_source =
          FormulaDefault{fit.family, fit.coefficient.value_or(0.0), f->second.relative_to_p};
      default_text = describe(plan.default_source);
    } else {
      TableDefault table;
      for (const auto& d : defaults) table.values[d.held_out_dataset] = d.value;
      for (const auto& s : surrogates) {
        if (!known.contains(s.dataset_id)) {
          throw ConfigError("surrogate '" + s.dataset_id + "' has no records, so '" + param +
                            "' has no leave-one-out default for it");
        }
      }
      plan.default_source = std::move(table);
      default_text = default_summary(defaults, space.at(param));
    }

    const auto result = run_experiment(plan, options);
    write_experiment(out_dir / "experiment" / param, hash, plan, result);

    auto summary = aggregate(result.pairs, param, config.aggregate);
    const auto obs = observations_from_pairs(result.pairs);
    auto test = noninferiority_test(obs, config.delta, param);
    all_pairs[param] = result.pairs;
    report.rows.push_back({param, default_text, summary, test});
    summaries.push_back(std::move(summary));
    tests.push_back(std::move(test));
  }
  apply_holm(tests, config.alpha);
  for (std::size_t i = 0; i < tests.size(); ++i) report.rows[i].test = tests[i];

  write_defaults_csv(out_dir / "defaults.csv", hash, all_defaults);
  write_histogram_csv(out_dir / "hist.csv", hash, histograms);
  write_risk_summary_csv(out_dir / "risk_summary.csv", hash, summaries);
  write_risk_pairs_csv(out_dir / "risk_pairs.csv", hash, all_pairs);
  write_test_csv(out_dir / "test.csv", hash, tests);
  write_summary_csv(out_dir / "summary.csv", hash, report.rows);
  return report;
}

RecordSet simulate_records(const ConfigurationSpace& space,
                           const std::vector<SurrogateSpec>& surrogates, std::size_t samples,
                           const std::string& metric, std::uint64_t seed) {
  const auto& info = metric_info(metric);
  const auto root = rng::KeyBuilder(kSimulateTag).add(seed).key();
  std::vector<PerformanceRecord> out;
  for (const auto& s : surrogates) {
    s.validate(space);
    for (std::size_t i = 0; i < samples; ++i) {
      auto config = sample_configuration(space, s.dataset_id, 0, static_cast<std::int64_t>(i),
                                         std::nullopt, root);
      const double risk = evaluate(s, config, FoldKey{0, FoldKey::kTestFold}, root);
      PerformanceRecord r;
      r.dataset_id = s.dataset_id;
      r.configuration = std::move(config);
      r.metric = info.name;
      r.value = info.is_score ? 1.0 - risk : risk;
      out.push_back(std::move(r));
    }
  }
  return RecordSet(space, metric, std::move(out));
}

void write_meta(const std::vector<SurrogateSpec>& surrogates, const std::filesystem::path& path,
                std::string_view hash) {
  csv::Writer w(path, hash, {"dataset_id", "n_features", "n_instances"});
  for (const auto& s : surrogates) {
    w.row({s.dataset_id, std::to_string(s.meta.n_features),
           s.meta.n_instances ? std::to_string(*s.meta.n_instances) : ""});
  }
}

ExecutionOptions execution_options_from_env() {
  ExecutionOptions o;
  const char* env = std::getenv("TUNERISK_THREADS");
  if (env == nullptr || *env == '\0') return o;
  const std::string_view text(env);
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v < 0) {
    throw ConfigError("TUNERISK_THREADS must be a non-negative integer, got '" +
                      std::string(text) + "'");
  }
  o.threads = v;
  return o;
}

}  // namespace tunerisk
