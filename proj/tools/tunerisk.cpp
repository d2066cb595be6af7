#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tunerisk/artifacts.hpp"
#include "tunerisk/csv.hpp"
#include "tunerisk/defaults.hpp"
#include "tunerisk/error.hpp"
#include "tunerisk/fit.hpp"
#include "tunerisk/harness.hpp"
#include "tunerisk/ingest.hpp"
#include "tunerisk/pipeline.hpp"
#include "tunerisk/risk.hpp"
#include "tunerisk/stats.hpp"

namespace fs = std::filesystem;
using namespace tunerisk;

namespace {

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

struct DefaultsArgs {
  std::string records, space, meta, family, metric, out;
  std::vector<std::string> params;
  std::size_t n = 10;
  bool relative_to_p = false;
  bool hist = false;
};

void cmd_defaults(const DefaultsArgs& a) {
  const auto space = load_space(a.space);
  const auto records = load_records(a.records, space);
  if (!a.metric.empty() && a.metric != records.metric()) {
    throw ConfigError("records use metric '" + records.metric() + "', expected '" + a.metric + "'");
  }
  nlohmann::json inputs = {{"records", file_digest(a.records)}, {"space", file_digest(a.space)}};
  if (!a.meta.empty()) inputs["meta"] = file_digest(a.meta);
  const auto hash = config_hash({{"command", "defaults"},
                                 {"n", a.n},
                                 {"params", a.params},
                                 {"family", a.family},
                                 {"relative_to_p", a.relative_to_p},
                                 {"inputs", inputs}});
  std::optional<FunctionFamily> family;
  if (!a.family.empty()) {
    family = parse_family(a.family);
    if (a.meta.empty()) throw ConfigError("--family needs --meta");
  }
  const auto params = a.params.empty() ? free_parameters(space) : a.params;
  const auto top = top_n(records, a.n);
  make_dir(a.out);

  std::vector<DefaultAssignment> all;
  std::vector<ParamHistogram> hist;
  for (const auto& p : params) {
    const auto d = derive_all_defaults(top, p, space);
    all.insert(all.end(), d.begin(), d.end());
    if (a.hist) hist.push_back({p, top_n_histogram(top, p, space)});
    if (family) {
      MetaFitOptions opts;
      opts.values_times_p = a.relative_to_p;
      const auto fit = fit_meta_function(top, p, load_meta(a.meta), *family, space, opts);
      write_fit_json(fs::path(a.out) / ("fit_" + p + ".json"), hash, p, fit);
      std::cout << p << ": " << fit.describe() << " (rmse " << csv::number(fit.metrics.rmse)
                << ")\n";
    }
  }
  write_defaults_csv(fs::path(a.out) / "defaults.csv", hash, all);
  if (a.hist) write_histogram_csv(fs::path(a.out) / "hist.csv", hash, hist);
  std::cout << "wrote " << all.size() << " default assignments to " << a.out << "\n";
}

void cmd_risk(const std::string& pairs_path, const std::string& out, bool sample_sd) {
  const auto pairs = load_pairs(pairs_path);
  const auto hash = config_hash({{"command", "risk"},
                                 {"deviation", sample_sd ? "sample" : "population"},
                                 {"inputs", {{"pairs", file_digest(pairs_path)}}}});
  AggregateOptions opts;
  opts.deviation = sample_sd ? Deviation::kSample : Deviation::kPopulation;
  std::vector<TuningRiskSummary> summaries;
  for (const auto& [param, list] : pairs) {
    summaries.push_back(aggregate(list, param, opts));
    const auto& s = summaries.back();
    std::cout << (param.empty() ? "(unnamed)" : param) << ": d=" << csv::number(s.d)
              << " s=" << csv::number(s.s) << " d_rel=" << csv::number(s.d_rel)
              << " s_rel=" << csv::number(s.s_rel) << " excluded=" << s.excluded.size() << "\n";
  }
  make_dir(out);
  write_risk_summary_csv(fs::path(out) / "risk_summary.csv", hash, summaries);
  write_risk_pairs_csv(fs::path(out) / "risk_pairs.csv", hash, pairs);
}

void cmd_test(const std::string& pairs_path, const std::string& out, double delta, double alpha,
              bool collapse) {
  const auto pairs = load_pairs(pairs_path);
  const auto hash = config_hash({{"command", "test"},
                                 {"delta", delta},
                                 {"alpha", alpha},
                                 {"collapse_seeds", collapse},
                                 {"inputs", {{"pairs", file_digest(pairs_path)}}}});
  std::vector<NonInferiorityResult> results;
  for (const auto& [param, list] : pairs) {
    std::vector<std::string> dropped;
    auto obs = observations_from_pairs(list, &dropped);
    for (const auto& d : dropped) {
      std::cerr << "note: '" << param << "': dataset " << d
                << " dropped (zero non-fixed risk)\n";
    }
    if (collapse) obs = collapse_seeds(obs);
    results.push_back(noninferiority_test(obs, delta, param));
  }
  apply_holm(results, alpha);
  for (const auto& r : results) {
    std::cout << (r.param_name.empty() ? "(unnamed)" : r.param_name) << ": N=" << r.n
              << " s_nr=" << csv::number(r.s_nr) << " z=" << csv::number(r.z)
              << " p=" << csv::number(r.p) << " " << decision_text(r) << "\n";
  }
  make_dir(out);
  write_test_csv(fs::path(out) / "test.csv", hash, results);
}

void apply_cv_overrides(nlohmann::json& j, int seeds, int iterations) {
  if (seeds > 0) j["cv"]["seeds"] = seeds;
  if (iterations > 0) j["cv"]["iterations"] = iterations;
}

void cmd_experiment(const std::string& plan_path, const std::string& out, int seeds,
                    int iterations) {
  auto j = read_json_file(plan_path);
  apply_cv_overrides(j, seeds, iterations);
  const auto plan = plan_from_json(j, fs::path(plan_path).parent_path());
  const auto hash = config_hash({{"command", "experiment"}, {"plan", j}});
  const auto result = run_experiment(plan, execution_options_from_env());
  write_experiment(out, hash, plan, result);
  const auto s = aggregate(result.pairs, plan.param);
  std::cout << plan.param << " (" << describe(plan.default_source) << "): d=" << csv::number(s.d)
            << " s=" << csv::number(s.s) << " over " << result.pairs.size() << " pairs\n";
}

struct PipelineArgs {
  std::string config, out;
  std::optional<std::size_t> n;
  std::optional<double> delta, alpha;
  std::optional<std::uint64_t> seed;
  int seeds = 0;
  int iterations = 0;
};

void cmd_pipeline(const PipelineArgs& a) {
  auto j = read_json_file(a.config);
  if (a.n) j["n"] = *a.n;
  if (a.delta) j["delta"] = *a.delta;
  if (a.alpha) j["alpha"] = *a.alpha;
  if (a.seed) j["seed"] = *a.seed;
  apply_cv_overrides(j, a.seeds, a.iterations);
  const auto config = pipeline_config_from_json(j, fs::path(a.config).parent_path());
  const auto report = run_pipeline(config, a.out, execution_options_from_env());
  std::cout << "config-hash " << report.hash << "\n";
  for (const auto& r : report.rows) {
    std::cout << r.param << ": default " << r.default_text << ", d=" << csv::number(r.risk.d)
              << ", z=" << csv::number(r.test.z) << ", p=" << csv::number(r.test.p) << ", "
              << decision_text(r.test) << "\n";
  }
}

void cmd_convert(const std::string& input, const std::string& space_path, const std::string& metric,
                 const std::string& out) {
  const auto space = load_space(space_path);
  const auto records = convert_openml(input, space, metric);
  const auto hash = config_hash({{"command", "convert-openml"},
                                 {"metric", metric},
                                 {"inputs",
                                  {{"export", file_digest(input)}, {"space", file_digest(space_path)}}}});
  write_records(records, out, hash);
  std::cout << "wrote " << records.records().size() << " records for "
            << records.dataset_ids().size() << " datasets to " << out << "\n";
}

void cmd_simulate(const std::string& config_path, const std::string& records_out,
                  const std::string& meta_out, std::size_t samples, const std::string& metric) {
  const auto j = read_json_file(config_path);
  const auto base = fs::path(config_path).parent_path();
  fs::path space_path = j.at("space").get<std::string>();
  if (space_path.is_relative()) space_path = base / space_path;
  const auto space = load_space(space_path);
  const auto seed = j.value("seed", std::uint64_t{0});
  const auto surrogates = surrogates_from_json(j.at("surrogates"), seed);
  const auto hash = config_hash({{"command", "simulate"},
                                 {"samples", samples},
                                 {"metric", metric},
                                 {"seed", seed},
                                 {"surrogates", j.at("surrogates")},
                                 {"inputs", {{"space", file_digest(space_path)}}}});
  const auto records = simulate_records(space, surrogates, samples, metric, seed);
  write_records(records, records_out, hash);
  if (!meta_out.empty()) write_meta(surrogates, meta_out, hash);
  std::cout << "wrote " << records.records().size() << " records for " << surrogates.size()
            << " datasets\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tuning risk of hyperparameter defaults"};
  app.require_subcommand(1);

  DefaultsArgs da;
  auto* defaults = app.add_subcommand("defaults", "Leave-one-out defaults from top-n records");
  defaults->add_option("--records", da.records, "Records CSV")->required();
  defaults->add_option("--space", da.space, "Configuration space JSON")->required();
  defaults->add_option("--n", da.n, "Top configurations per dataset")->capture_default_str();
  defaults->add_option("--param", da.params, "Parameters (default: all free ones)");
  defaults->add_option("--meta", da.meta, "Dataset metadata CSV");
  defaults->add_option("--family", da.family, "Fit a function of p: a*p, p^b, c^sqrt(p), constant, 1/p, sqrt(p)");
  defaults->add_flag("--relative-to-p", da.relative_to_p, "Parameter is a fraction of p");
  defaults->add_flag("--hist", da.hist, "Also write hist.csv");
  defaults->add_option("--metric", da.metric, "Expected metric name");
  defaults->add_option("--out", da.out, "Output directory")->required();

  std::string pairs_path, out_dir;
  bool sample_sd = false;
  auto* risk = app.add_subcommand("risk", "Aggregate tuning risk from paired risks");
  risk->add_option("--pairs", pairs_path, "Pairs CSV")->required();
  risk->add_option("--out", out_dir, "Output directory")->required();
  risk->add_flag("--sample-sd", sample_sd, "Use the n-1 standard deviation");

  double delta = 0.01;
  double alpha = 0.05;
  bool collapse = false;
  auto* test = app.add_subcommand("test", "Non-inferiority test with Holm correction");
  test->add_option("--pairs", pairs_path, "Pairs CSV")->required();
  test->add_option("--out", out_dir, "Output directory")->required();
  test->add_option("--delta", delta, "Non-inferiority margin")->capture_default_str();
  test->add_option("--alpha", alpha, "Family-wise significance level")->capture_default_str();
  test->add_flag("--collapse-seeds", collapse, "One observation per dataset (mean over seeds)");

  std::string plan_path;
  int seeds = 0;
  int iterations = 0;
  auto* experiment = app.add_subcommand("experiment", "Fixed vs non-fixed search on surrogates");
  experiment->add_option("--plan", plan_path, "Plan JSON")->required();
  experiment->add_option("--out", out_dir, "Output directory")->required();
  experiment->add_option("--seeds", seeds, "Override cv.seeds");
  experiment->add_option("--iterations", iterations, "Override cv.iterations");

  PipelineArgs pa;
  auto* pipeline = app.add_subcommand("pipeline", "defaults -> experiment -> risk -> test");
  pipeline->add_option("--config", pa.config, "Pipeline JSON")->required();
  pipeline->add_option("--out", pa.out, "Output directory")->required();
  pipeline->add_option("--n", pa.n, "Override n");
  pipeline->add_option("--delta", pa.delta, "Override delta");
  pipeline->add_option("--alpha", pa.alpha, "Override alpha");
  pipeline->add_option("--seed", pa.seed, "Override the root seed");
  pipeline->add_option("--seeds", pa.seeds, "Override cv.seeds");
  pipeline->add_option("--iterations", pa.iterations, "Override cv.iterations");

  std::string input, space_path, metric, out_file;
  auto* convert = app.add_subcommand("convert-openml", "Normalize an OpenML evaluation export");
  convert->add_option("--input", input, "Export CSV")->required();
  convert->add_option("--space", space_path, "Configuration space JSON")->required();
  convert->add_option("--metric", metric, "Metric to keep")->required();
  convert->add_option("--out", out_file, "Records CSV to write")->required();

  std::string config_path, meta_out;
  std::size_t samples = 200;
  std::string sim_metric = "accuracy";
  auto* simulate = app.add_subcommand("simulate", "Synthetic records from a pipeline config's surrogates");
  simulate->add_option("--config", config_path, "Pipeline JSON")->required();
  simulate->add_option("--records-out", out_file, "Records CSV to write")->required();
  simulate->add_option("--meta-out", meta_out, "Metadata CSV to write");
  simulate->add_option("--samples", samples, "Configurations per dataset")->capture_default_str();
  simulate->add_option("--metric", sim_metric, "Metric name")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*defaults) cmd_defaults(da);
    if (*risk) cmd_risk(pairs_path, out_dir, sample_sd);
    if (*test) cmd_test(pairs_path, out_dir, delta, alpha, collapse);
    if (*experiment) cmd_experiment(plan_path, out_dir, seeds, iterations);
    if (*pipeline) cmd_pipeline(pa);
    if (*convert) cmd_convert(input, space_path, metric, out_file);
    if (*simulate) cmd_simulate(config_path, out_file, meta_out, samples, sim_metric);
  } catch (const Error& e) {
    std::cerr << "tunerisk: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "tunerisk: internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
