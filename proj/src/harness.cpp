#include "tunerisk/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tunerisk/csv.hpp"
#include "tunerisk/error.hpp"
#include "tunerisk/rng.hpp"

namespace tunerisk {

namespace {

constexpr std::uint64_t kNoiseTag = 0x401f;
constexpr std::uint64_t kGenerateTag = 0x6e4e;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double numeric(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  throw DataError("numeric value expected, got '" + format_value(v) + "'");
}

const std::string& term_param(const EffectTerm& t) {
  return std::visit([](const auto& x) -> const std::string& { return x.param; }, t);
}

double max_effect(const EffectTerm& t) {
  return std::visit(Overloaded{
                        [](const FlatTerm&) { return 0.0; },
                        [](const QuadraticTerm& q) { return q.depth; },
                        [](const CategoricalTerm& c) {
                          double m = 0.0;
                          for (const auto& [k, v] : c.penalties) m = std::max(m, v);
                          return m;
                        },
                    },
                    t);
}

std::uint64_t config_key(const Configuration& config) {
  return rng::fnv1a64(config.serialize());
}

double evaluate_keyed(const SurrogateSpec& s, double noiseless, std::uint64_t cfg_key,
                      FoldKey fold, std::uint64_t root_seed) {
  double risk = noiseless;
  if (s.noise_sd > 0.0) {
    const auto key = rng::KeyBuilder(kNoiseTag)
                         .add(root_seed)
                         .add(std::string_view(s.dataset_id))
                         .add(static_cast<std::int64_t>(fold.outer))
                         .add(static_cast<std::int64_t>(fold.inner))
                         .add(cfg_key)
                         .key();
    rng::CounterStream stream(key);
    risk += s.noise_sd * stream.normal();
  }
  return std::clamp(risk, 0.0, 1.0);
}

}  // namespace

// --- Surrogates -----------------------------------------------------------------

double OptimumSpec::at(double p) const {
  return p_exponent == 0.0 ? coefficient : coefficient * std::pow(p, p_exponent);
}

void SurrogateSpec::validate(const ConfigurationSpace& space) const {
  const std::string where = "surrogate '" + dataset_id + "': ";
  if (dataset_id.empty()) throw ConfigError("surrogate with empty dataset_id");
  if (meta.n_features < 1) throw ConfigError(where + "n_features must be >= 1");
  if (!(base_risk >= 0.0 && base_risk < 1.0)) throw ConfigError(where + "base_risk must lie in [0, 1)");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError(where + "noise_sd must be >= 0");
  double budget = base_risk;
  std::set<std::string> seen;
  for (const auto& t : terms) {
    const auto& param = term_param(t);
    const auto* d = space.find(param);
    if (d == nullptr) throw ConfigError(where + "term for unknown parameter '" + param + "'");
    if (!seen.insert(param).second) throw ConfigError(where + "two terms for '" + param + "'");
    if (const auto* q = std::get_if<QuadraticTerm>(&t)) {
      if (!d->is_numeric()) throw ConfigError(where + "quadratic term on non-numeric '" + param + "'");
      if (!(q->depth >= 0.0) || !(q->curvature >= 0.0)) {
        throw ConfigError(where + "quadratic term on '" + param + "' needs depth, curvature >= 0");
      }
      if (q->scale == Scale::kLog) {
        if (d->lo() <= 0.0) throw ConfigError(where + "log-scale term on '" + param + "' needs a positive domain");
        if (!(q->optimum.at(static_cast<double>(meta.n_features)) > 0.0)) {
          throw ConfigError(where + "log-scale term on '" + param + "' needs a positive optimum");
        }
      }
    } else if (const auto* c = std::get_if<CategoricalTerm>(&t)) {
      for (const auto& [k, v] : c->penalties) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(where + "penalty for '" + k + "' outside [0, 1]");
      }
    }
    budget += max_effect(t);
  }
  if (budget > 1.0 + 1e-12) {
    throw ConfigError(where + "base_risk plus maximal effects is " + csv::number(budget) +
                      ", which exceeds 1");
  }
}

double noiseless_risk(const SurrogateSpec& surrogate, const Configuration& config) {
  double risk = surrogate.base_risk;
  const auto p = static_cast<double>(surrogate.meta.n_features);
  for (const auto& term : surrogate.terms) {
    risk += std::visit(
        Overloaded{
            [](const FlatTerm&) { return 0.0; },
            [&](const QuadraticTerm& q) {
              const double v = numeric(config.at(q.param));
              const double opt = q.optimum.at(p);
              const double dist = q.scale == Scale::kLog ? std::log(v) - std::log(opt) : v - opt;
              return q.depth * std::min(1.0, q.curvature * dist * dist);
            },
            [&](const CategoricalTerm& c) {
              auto it = c.penalties.find(format_value(config.at(c.param)));
              return it == c.penalties.end() ? 0.0 : it->second;
            },
        },
        term);
  }
  return std::clamp(risk, 0.0, 1.0);
}

double evaluate(const SurrogateSpec& surrogate, const Configuration& config, FoldKey fold,
                std::uint64_t root_seed) {
  return evaluate_keyed(surrogate, noiseless_risk(surrogate, config), config_key(config), fold,
                        root_seed);
}

void CvSpec::validate() const {
  if (outer_folds < 1 || inner_folds < 1 || search_iterations < 1 || seeds < 1) {
    throw ConfigError("cv: outer_folds, inner_folds, iterations, and seeds must all be >= 1");
  }
}

// --- Defaults -------------------------------------------------------------------

Value resolve_default(const DefaultSource& source, const HyperparameterDomain& domain,
                      const DatasetMeta& meta) {
  auto coerce_numeric = [&](double v) -> Value {
    if (!std::isfinite(v)) {
      throw ConfigError("default for '" + domain.name() + "' on dataset '" + meta.dataset_id +
                        "' is not finite");
    }
    if (domain.kind() == ParamKind::kInteger) return static_cast<std::int64_t>(std::llround(v));
    if (domain.kind() == ParamKind::kContinuous) return v;
    throw ConfigError("formula default for non-numeric parameter '" + domain.name() + "'");
  };
  Value v = std::visit(
      Overloaded{
          [&](const ConstantDefault& c) -> Value {
            if (domain.kind() == ParamKind::kInteger) {
              if (const auto* d = std::get_if<double>(&c.value)) return coerce_numeric(*d);
            }
            if (domain.kind() == ParamKind::kContinuous) {
              if (const auto* i = std::get_if<std::int64_t>(&c.value)) {
                return static_cast<double>(*i);
              }
            }
            return c.value;
          },
          [&](const FormulaDefault& f) -> Value {
            const auto p = static_cast<double>(meta.n_features);
            double x = evaluate_family(f.family, f.coefficient, p);
            if (f.relative_to_p) x /= p;
            return coerce_numeric(x);
          },
          [&](const TableDefault& t) -> Value {
            auto it = t.values.find(meta.dataset_id);
            if (it == t.values.end()) {
              throw ConfigError("no default for '" + domain.name() + "' on dataset '" +
                                meta.dataset_id + "'");
            }
            return it->second;
          },
      },
      source);
  if (!domain.contains(v)) {
    throw ConfigError("default " + format_value(v) + " for '" + domain.name() + "' on dataset '" +
                      meta.dataset_id + "' lies outside its domain");
  }
  return v;
}

std::string describe(const DefaultSource& source) {
  return std::visit(Overloaded{
                        [](const ConstantDefault& c) { return "constant " + format_value(c.value); },
                        [](const FormulaDefault& f) {
                          FittedFunction fn;
                          fn.family = f.family;
                          if (has_coefficient(f.family)) fn.coefficient = f.coefficient;
                          return fn.describe() + (f.relative_to_p ? " / p" : "");
                        },
                        [](const TableDefault& t) {
                          return "table (" + std::to_string(t.values.size()) + " datasets)";
                        },
                    },
                    source);
}

void ExperimentPlan::validate() const {
  const auto& d = space.at(param);
  if (d.fixed_value()) {
    throw ConfigError("studied parameter '" + param + "' has a fixed value in the space");
  }
  cv.validate();
  if (surrogates.empty()) throw ConfigError("plan has no surrogate datasets");
  std::set<std::string> ids;
  for (const auto& s : surrogates) {
    if (!ids.insert(s.dataset_id).second) {
      throw ConfigError("duplicate surrogate dataset '" + s.dataset_id + "'");
    }
    s.validate(space);
    (void)resolve_default(default_source, d, s.meta);
  }
}

std::string_view to_string(Condition c) { return c == Condition::kFixed ? "fixed" : "nonfixed"; }

// --- Search ---------------------------------------------------------------------

Configuration search_candidate(const ExperimentPlan& plan, const SurrogateSpec& surrogate,
                               Condition condition, std::int64_t seed_index,
                               std::int64_t iteration, const Value& fixed_value) {
  std::optional<FixedParam> fixed;
  if (condition == Condition::kFixed) fixed = FixedParam{plan.param, fixed_value};
  return sample_configuration(plan.space, surrogate.dataset_id, seed_index, iteration, fixed,
                              plan.root_seed);
}

RunTrace run_condition(const ExperimentPlan& plan, const SurrogateSpec& surrogate,
                       Condition condition, std::int64_t seed_index) {
  const auto& domain = plan.space.at(plan.param);
  const Value fixed_value = resolve_default(plan.default_source, domain, surrogate.meta);
  const auto iterations = static_cast<std::size_t>(plan.cv.search_iterations);

  // The candidate list depends only on (dataset, seed, iteration), so every
  // outer fold searches the same candidates.
  std::vector<Configuration> candidates;
  std::vector<double> base;
  std::vector<std::uint64_t> keys;
  candidates.reserve(iterations);
  for (std::size_t t = 0; t < iterations; ++t) {
    candidates.push_back(search_candidate(plan, surrogate, condition, seed_index,
                                          static_cast<std::int64_t>(t), fixed_value));
    base.push_back(noiseless_risk(surrogate, candidates.back()));
    keys.push_back(config_key(candidates.back()));
  }

  RunTrace trace;
  trace.dataset_id = surrogate.dataset_id;
  trace.condition = condition;
  trace.param_name = plan.param;
  trace.seed_index = seed_index;
  trace.best_so_far.assign(iterations, 0.0);

  const double inner_n = plan.cv.inner_folds;
  double test_sum = 0.0;
  double val_sum = 0.0;
  for (std::int32_t outer = 0; outer < plan.cv.outer_folds; ++outer) {
    FoldTrace fold;
    fold.validation_accuracy.reserve(iterations);
    double best = -1.0;
    for (std::size_t t = 0; t < iterations; ++t) {
      double acc = 0.0;
      for (std::int32_t inner = 0; inner < plan.cv.inner_folds; ++inner) {
        acc += 1.0 - evaluate_keyed(surrogate, base[t], keys[t], {outer, inner}, plan.root_seed);
      }
      acc /= inner_n;
      fold.validation_accuracy.push_back(acc);
      if (acc > best) {  // strict: earliest iteration wins ties
        best = acc;
        fold.chosen_iteration = t;
      }
      trace.best_so_far[t] += best;
    }
    const auto c = fold.chosen_iteration;
    fold.chosen = candidates[c];
    fold.test_risk = evaluate_keyed(surrogate, base[c], keys[c], {outer, FoldKey::kTestFold},
                                    plan.root_seed);
    test_sum += fold.test_risk;
    val_sum += best;
    trace.folds.push_back(std::move(fold));
  }
  const double outer_n = plan.cv.outer_folds;
  for (auto& b : trace.best_so_far) b /= outer_n;
  trace.final_test_risk = test_sum / outer_n;
  trace.final_validation_accuracy = val_sum / outer_n;
  return trace;
}

namespace {

struct Cell {
  std::size_t surrogate;
  std::int64_t seed;
  Condition condition;
};

std::vector<Cell> cells_of(const ExperimentPlan& plan) {
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < plan.surrogates.size(); ++s) {
    for (std::int64_t seed = 0; seed < plan.cv.seeds; ++seed) {
      cells.push_back({s, seed, Condition::kFixed});
      cells.push_back({s, seed, Condition::kNonFixed});
    }
  }
  return cells;
}

ExperimentResult assemble(std::vector<RunTrace> traces) {
  ExperimentResult result;
  for (std::size_t i = 0; i + 1 < traces.size(); i += 2) {
    const auto& f = traces[i];
    const auto& nf = traces[i + 1];
    result.pairs.push_back({f.dataset_id, f.seed_index, f.final_test_risk, nf.final_test_risk});
  }
  result.traces = std::move(traces);
  return result;
}

}  // namespace

ExperimentResult run_experiment_serial(const ExperimentPlan& plan) {
  plan.validate();
  std::vector<RunTrace> traces;
  for (const auto& cell : cells_of(plan)) {
    traces.push_back(run_condition(plan, plan.surrogates[cell.surrogate], cell.condition, cell.seed));
  }
  return assemble(std::move(traces));
}

ExperimentResult run_experiment(const ExperimentPlan& plan, const ExecutionOptions& options) {
  plan.validate();
  const auto cells = cells_of(plan);
  std::vector<RunTrace> traces(cells.size());
  std::vector<std::string> failures(cells.size());
  const auto count = static_cast<std::int64_t>(cells.size());
#ifdef _OPENMP
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#else
  (void)options;
#endif
  for (std::int64_t i = 0; i < count; ++i) {
    const auto& cell = cells[i];
    try {
      traces[i] = run_condition(plan, plan.surrogates[cell.surrogate], cell.condition, cell.seed);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw DataError(f);
  }
  return assemble(std::move(traces));
}

// --- Curves ---------------------------------------------------------------------

namespace {

void pointwise_stats(const std::vector<const std::vector<double>*>& series, ConditionCurve& out) {
  const std::size_t len = series.front()->size();
  for (const auto* s : series) {
    if (s->size() != len) throw DataError("curves of different lengths cannot be aggregated");
  }
  const auto n = static_cast<double>(series.size());
  out.mean.assign(len, 0.0);
  out.sd.assign(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (const auto* s : series) sum += (*s)[t];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto* s : series) ss += ((*s)[t] - mean) * ((*s)[t] - mean);
    out.mean[t] = mean;
    out.sd[t] = std::sqrt(ss / n);
  }
}

}  // namespace

std::vector<ConditionCurve> rank_curves(std::span<const RunTrace> traces) {
  if (traces.empty()) throw DataError("rank curves need at least one group");
  using GroupKey = std::tuple<std::string, std::string, std::int64_t>;
  std::map<GroupKey, std::pair<const RunTrace*, const RunTrace*>> groups;
  for (const auto& t : traces) {
    auto& g = groups[{t.param_name, t.dataset_id, t.seed_index}];
    auto& slot = t.condition == Condition::kFixed ? g.first : g.second;
    if (slot != nullptr) {
      throw DataError("duplicate " + std::string(to_string(t.condition)) + " trace for (" +
                      t.dataset_id + ", seed " + std::to_string(t.seed_index) + ")");
    }
    slot = &t;
  }
  std::vector<std::vector<double>> fixed_ranks;
  std::vector<std::vector<double>> nonfixed_ranks;
  for (const auto& [key, g] : groups) {
    if (g.first == nullptr || g.second == nullptr) {
      throw DataError("group (" + std::get<1>(key) + ", seed " + std::to_string(std::get<2>(key)) +
                      ") lacks the " + (g.first == nullptr ? "fixed" : "nonfixed") + " condition");
    }
    const auto& f = g.first->best_so_far;
    const auto& nf = g.second->best_so_far;
    if (f.size() != nf.size()) throw DataError("paired traces differ in length");
    std::vector<double> rf(f.size());
    std::vector<double> rn(f.size());
    for (std::size_t t = 0; t < f.size(); ++t) {
      if (f[t] > nf[t]) {
        rf[t] = 1.0;
        rn[t] = 2.0;
      } else if (f[t] < nf[t]) {
        rf[t] = 2.0;
        rn[t] = 1.0;
      } else {
        rf[t] = rn[t] = 1.5;
      }
    }
    fixed_ranks.push_back(std::move(rf));
    nonfixed_ranks.push_back(std::move(rn));
  }
  std::vector<ConditionCurve> out(2);
  out[0].condition = Condition::kFixed;
  out[1].condition = Condition::kNonFixed;
  std::vector<const std::vector<double>*> fs;
  std::vector<const std::vector<double>*> ns;
  for (const auto& r : fixed_ranks) fs.push_back(&r);
  for (const auto& r : nonfixed_ranks) ns.push_back(&r);
  pointwise_stats(fs, out[0]);
  pointwise_stats(ns, out[1]);
  return out;
}

std::vector<ConditionCurve> accuracy_curves(std::span<const RunTrace> traces) {
  if (traces.empty()) throw DataError("accuracy curves need at least one trace");
  std::vector<ConditionCurve> out;
  for (auto c : {Condition::kFixed, Condition::kNonFixed}) {
    std::vector<const std::vector<double>*> series;
    for (const auto& t : traces) {
      if (t.condition == c) series.push_back(&t.best_so_far);
    }
    if (series.empty()) continue;
    ConditionCurve curve;
    curve.condition = c;
    pointwise_stats(series, curve);
    out.push_back(std::move(curve));
  }
  return out;
}

// --- Plan JSON ------------------------------------------------------------------

TableDefault load_default_table(const std::filesystem::path& path,
                                const HyperparameterDomain& domain) {
  const auto table = csv::read(path);
  const auto param_c = table.column("param");
  const auto id_c = table.column("held_out_dataset");
  const auto value_c = table.column("value");
  if (!param_c || !id_c || !value_c) {
    throw ConfigError("'" + path.string() +
                      "' needs columns param, held_out_dataset, value");
  }
  TableDefault out;
  for (const auto& row : table.rows) {
    if (row.cells[*param_c] != domain.name()) continue;
    try {
      out.values[row.cells[*id_c]] = domain.parse(row.cells[*value_c]);
    } catch (const ValidationError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(row.line) + ": " + e.what());
    }
  }
  if (out.values.empty()) {
    throw ConfigError("'" + path.string() + "' has no defaults for '" + domain.name() + "'");
  }
  return out;
}

DefaultSource default_source_from_json(const nlohmann::json& j, const ConfigurationSpace& space,
                                       std::string_view param,
                                       const std::filesystem::path& base_dir) {
  const auto& domain = space.at(param);
  if (j.contains("constant")) {
    const auto& c = j.at("constant");
    if (domain.kind() == ParamKind::kInteger && c.is_number_float()) {
      return ConstantDefault{static_cast<std::int64_t>(std::llround(c.get<double>()))};
    }
    if (domain.kind() == ParamKind::kContinuous && c.is_number()) {
      return ConstantDefault{c.get<double>()};
    }
    return ConstantDefault{value_from_json(domain, c)};
  }
  if (j.contains("formula")) {
    FormulaDefault f;
    f.family = parse_family(j.at("formula").get<std::string>());
    if (has_coefficient(f.family)) {
      if (!j.contains("coefficient")) {
        throw ConfigError("formula default '" + std::string(to_string(f.family)) +
                          "' needs a coefficient");
      }
      f.coefficient = j.at("coefficient").get<double>();
    }
    f.relative_to_p = j.value("relative_to_p", false);
    return f;
  }
  if (j.contains("table")) {
    auto path = std::filesystem::path(j.at("table").get<std::string>());
    if (path.is_relative()) path = base_dir / path;
    return load_default_table(path, domain);
  }
  if (j.contains("values")) {
    TableDefault t;
    for (const auto& [id, v] : j.at("values").items()) t.values[id] = value_from_json(domain, v);
    return t;
  }
  throw ConfigError("default source needs one of: constant, formula, table, values");
}

SurrogateSpec surrogate_from_json(const nlohmann::json& j) {
  try {
    SurrogateSpec s;
    s.dataset_id = j.at("dataset_id").get<std::string>();
    s.meta.dataset_id = s.dataset_id;
    s.meta.n_features = j.at("n_features").get<std::int64_t>();
    if (j.contains("n_instances")) s.meta.n_instances = j.at("n_instances").get<std::int64_t>();
    s.base_risk = j.at("base_risk").get<double>();
    s.noise_sd = j.value("noise_sd", 0.0);
    for (const auto& t : j.value("terms", nlohmann::json::array())) {
      const auto type = t.at("type").get<std::string>();
      const auto param = t.at("param").get<std::string>();
      if (type == "flat") {
        s.terms.emplace_back(FlatTerm{param});
      } else if (type == "quadratic") {
        QuadraticTerm q;
        q.param = param;
        const auto scale = t.value("scale", std::string("log"));
        if (scale != "log" && scale != "linear") {
          throw ConfigError("term on '" + param + "': unknown scale '" + scale + "'");
        }
        q.scale = scale == "log" ? Scale::kLog : Scale::kLinear;
        const auto& opt = t.at("optimum");
        if (opt.is_number()) {
          q.optimum = {opt.get<double>(), 0.0};
        } else {
          q.optimum = {opt.value("coefficient", 1.0), opt.value("p_exponent", 0.0)};
        }
        q.curvature = t.value("curvature", 1.0);
        q.depth = t.value("depth", 0.1);
        s.terms.emplace_back(std::move(q));
      } else if (type == "categorical") {
        CategoricalTerm c;
        c.param = param;
        for (const auto& [k, v] : t.at("penalties").items()) c.penalties[k] = v.get<double>();
        s.terms.emplace_back(std::move(c));
      } else {
        throw ConfigError("unknown term type '" + type + "'");
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed surrogate: ") + e.what());
  }
}

std::vector<SurrogateSpec> surrogates_from_json(const nlohmann::json& j, std::uint64_t root_seed) {
  if (j.is_array()) {
    std::vector<SurrogateSpec> out;
    for (const auto& s : j) out.push_back(surrogate_from_json(s));
    return out;
  }
  const auto tmpl = j.value("template", nlohmann::json::object());
  std::vector<nlohmann::json> entries;
  const auto& datasets = j.at("datasets");
  if (datasets.is_array()) {
    for (const auto& d : datasets) entries.push_back(d);
  } else {
    // {"generate": {"count", "n_features": [lo, hi], "base_risk": [lo, hi], "prefix"}}
    const auto& g = datasets.at("generate");
    const auto count = g.at("count").get<std::int64_t>();
    const auto p_range = g.value("n_features", std::vector<std::int64_t>{4, 500});
    const auto r_range = g.value("base_risk", std::vector<double>{0.05, 0.3});
    const auto prefix = g.value("prefix", std::string("s"));
    if (count < 1 || p_range.size() != 2 || r_range.size() != 2 || p_range[0] < 1 ||
        p_range[0] > p_range[1] || r_range[0] > r_range[1]) {
      throw ConfigError("malformed surrogate generator");
    }
    for (std::int64_t i = 0; i < count; ++i) {
      rng::CounterStream stream(rng::KeyBuilder(kGenerateTag).add(root_seed).add(i).key());
      const double lp = std::log(static_cast<double>(p_range[0]));
      const double hp = std::log(static_cast<double>(p_range[1]) + 1.0);
      auto p = static_cast<std::int64_t>(std::floor(std::exp(lp + stream.uniform() * (hp - lp))));
      p = std::clamp(p, p_range[0], p_range[1]);
      const double r = r_range[0] + stream.uniform() * (r_range[1] - r_range[0]);
      char id[32];
      std::snprintf(id, sizeof id, "%03lld", static_cast<long long>(i + 1));
      entries.push_back({{"dataset_id", prefix + id}, {"n_features", p}, {"base_risk", r}});
    }
  }
  std::vector<SurrogateSpec> out;
  for (const auto& e : entries) {
    auto merged = tmpl;
    merged.update(e);
    out.push_back(surrogate_from_json(merged));
  }
  return out;
}

ExperimentPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  try {
    ExperimentPlan plan;
    plan.name = j.value("name", std::string("experiment"));
    plan.root_seed = j.value("seed", std::uint64_t{0});
    const auto& space = j.at("space");
    if (space.is_string()) {
      auto path = std::filesystem::path(space.get<std::string>());
      if (path.is_relative()) path = base_dir / path;
      plan.space = load_space(path);
    } else {
      plan.space = space_from_json(space);
    }
    plan.param = j.at("param").get<std::string>();
    (void)plan.space.at(plan.param);
    plan.default_source = default_source_from_json(j.at("default"), plan.space, plan.param, base_dir);
    if (j.contains("cv")) {
      const auto& cv = j.at("cv");
      plan.cv.outer_folds = cv.value("outer_folds", plan.cv.outer_folds);
      plan.cv.inner_folds = cv.value("inner_folds", plan.cv.inner_folds);
      plan.cv.search_iterations = cv.value("iterations", plan.cv.search_iterations);
      plan.cv.seeds = cv.value("seeds", plan.cv.seeds);
    }
    plan.surrogates = surrogates_from_json(j.at("surrogates"), plan.root_seed);
    plan.validate();
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed plan: ") + e.what());
  }
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open plan file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
  return plan_from_json(j, path.parent_path());
}

}  // namespace tunerisk
