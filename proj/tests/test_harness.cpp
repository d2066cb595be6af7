#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "tunerisk/error.hpp"
#include "tunerisk/harness.hpp"

using namespace tunerisk;

namespace {

ConfigurationSpace space() {
  return ConfigurationSpace(
      "svm", {HyperparameterDomain::continuous("C", 1.0 / 32, 32768, Scale::kLog),
              HyperparameterDomain::continuous("gamma", std::ldexp(1.0, -15), 8.0, Scale::kLog),
              HyperparameterDomain::boolean("shrinking")});
}

SurrogateSpec flat(const std::string& id, std::int64_t p, double noise = 0.0) {
  SurrogateSpec s;
  s.dataset_id = id;
  s.meta = {id, p, std::nullopt};
  s.base_risk = 0.2;
  s.terms = {FlatTerm{"C"}, FlatTerm{"gamma"}, FlatTerm{"shrinking"}};
  s.noise_sd = noise;
  return s;
}

SurrogateSpec sharp(const std::string& id, std::int64_t p, double noise = 0.0) {
  auto s = flat(id, p, noise);
  s.terms = {QuadraticTerm{"gamma", Scale::kLog, {1.0, -1.0}, 1.0, 0.1},
             QuadraticTerm{"C", Scale::kLog, {1.0, 0.0}, 0.05, 0.05}};
  return s;
}

ExperimentPlan plan_with(std::vector<SurrogateSpec> surrogates, DefaultSource source,
                         const std::string& param = "gamma") {
  ExperimentPlan plan;
  plan.name = "t";
  plan.space = space();
  plan.param = param;
  plan.default_source = std::move(source);
  plan.surrogates = std::move(surrogates);
  plan.cv = {3, 2, 15, 2};
  plan.root_seed = 77;
  return plan;
}

Configuration config(double C, double gamma, bool shrinking) {
  return Configuration({{"C", C}, {"gamma", gamma}, {"shrinking", shrinking}});
}

RunTrace trace(const std::string& id, Condition c, std::int64_t seed, std::vector<double> curve) {
  RunTrace t;
  t.dataset_id = id;
  t.condition = c;
  t.param_name = "gamma";
  t.seed_index = seed;
  t.best_so_far = std::move(curve);
  return t;
}

}  // namespace

TEST_CASE("flat surrogate without noise ignores the configuration") {
  const auto s = flat("d", 10);
  const double r = evaluate(s, config(1, 0.1, true), {0, 0});
  CHECK(r == 0.2);
  CHECK(evaluate(s, config(1000, 1e-4, false), {3, FoldKey::kTestFold}) == r);
}

TEST_CASE("quadratic term attains its minimum at the optimum") {
  auto s = flat("d", 10);
  s.terms = {QuadraticTerm{"gamma", Scale::kLog, {0.01, 0.0}, 1.0, 0.1}};
  CHECK(noiseless_risk(s, config(1, 0.01, true)) == 0.2);
  CHECK(noiseless_risk(s, config(1, 0.01 * std::exp(0.5), true)) == doctest::Approx(0.2 + 0.1 * 0.25));
  CHECK(noiseless_risk(s, config(1, 8.0, true)) == doctest::Approx(0.3));  // saturated
  auto linked = sharp("d", 16);
  CHECK(noiseless_risk(linked, config(1, 1.0 / 16, true)) == doctest::Approx(0.2));
}

TEST_CASE("categorical penalties") {
  auto s = flat("d", 10);
  s.terms = {CategoricalTerm{"shrinking", {{"false", 0.05}}}};
  CHECK(noiseless_risk(s, config(1, 1, true)) == 0.2);
  CHECK(noiseless_risk(s, config(1, 1, false)) == doctest::Approx(0.25));
}

TEST_CASE("noisy evaluation is deterministic per (configuration, fold)") {
  const auto s = flat("d", 10, 0.05);
  const auto c = config(2, 0.5, true);
  CHECK(evaluate(s, c, {1, 2}, 5) == evaluate(s, c, {1, 2}, 5));
  CHECK(evaluate(s, c, {1, 2}, 5) != evaluate(s, c, {1, 3}, 5));
  CHECK(evaluate(s, c, {1, 2}, 5) != evaluate(s, c, {1, 2}, 6));
  CHECK(evaluate(s, c, {1, 2}, 5) != evaluate(s, config(2, 0.25, true), {1, 2}, 5));
}

TEST_CASE("surrogate validation") {
  auto s = sharp("d", 10);
  CHECK_NOTHROW(s.validate(space()));
  s.base_risk = 0.9;
  CHECK_THROWS_AS(s.validate(space()), ConfigError);  // 0.9 + 0.1 + 0.05 > 1
  auto unknown = flat("d", 10);
  unknown.terms.push_back(FlatTerm{"degree"});
  CHECK_THROWS_AS(unknown.validate(space()), ConfigError);
  auto dup = flat("d", 10);
  dup.terms.push_back(FlatTerm{"C"});
  CHECK_THROWS_AS(dup.validate(space()), ConfigError);
}

TEST_CASE("default sources resolve per dataset") {
  const auto& gamma = space().at("gamma");
  const DatasetMeta m{"d", 8, std::nullopt};
  CHECK(std::get<double>(resolve_default(FormulaDefault{FunctionFamily::kInverse, 0, false}, gamma, m)) == 0.125);
  CHECK(std::get<double>(resolve_default(ConstantDefault{0.5}, gamma, m)) == 0.5);
  CHECK_THROWS_AS((void)resolve_default(ConstantDefault{100.0}, gamma, m), ConfigError);
  CHECK_THROWS_AS((void)resolve_default(TableDefault{{{"other", 0.5}}}, gamma, m), ConfigError);
  const auto leaf = HyperparameterDomain::integer("leaf", 1, 20);
  CHECK(std::get<std::int64_t>(resolve_default(FormulaDefault{FunctionFamily::kSqrt, 0, false}, leaf, m)) == 3);
  CHECK(describe(FormulaDefault{FunctionFamily::kSqrt, 0, true}) == "sqrt(p) / p");
}

TEST_CASE("flat objective without noise gives identical fixed and non-fixed risks") {
  const auto plan = plan_with({flat("a", 4), flat("b", 9), flat("c", 16)}, ConstantDefault{0.001});
  const auto result = run_experiment_serial(plan);
  REQUIRE(result.pairs.size() == 6);
  CHECK(result.traces.size() == 12);
  for (const auto& p : result.pairs) CHECK(p.fixed_risk == p.nonfixed_risk);
}

TEST_CASE("pinning the studied parameter keeps the other draws") {
  const auto plan = plan_with({sharp("a", 4)}, ConstantDefault{0.001});
  const auto& s = plan.surrogates[0];
  for (int it = 0; it < 20; ++it) {
    const auto f = search_candidate(plan, s, Condition::kFixed, 1, it, Value{0.001});
    const auto n = search_candidate(plan, s, Condition::kNonFixed, 1, it, Value{0.001});
    CHECK(std::get<double>(f.at("gamma")) == 0.001);
    CHECK(f.at("C") == n.at("C"));
    CHECK(f.at("shrinking") == n.at("shrinking"));
  }
}

TEST_CASE("a default at the optimum dominates the search at every iteration") {
  auto s = flat("a", 16);
  s.terms = {QuadraticTerm{"gamma", Scale::kLog, {1.0, -1.0}, 1.0, 0.1}, FlatTerm{"C"}};
  const auto plan = plan_with({s}, FormulaDefault{FunctionFamily::kInverse, 0, false});
  for (std::int64_t seed = 0; seed < 3; ++seed) {
    const auto f = run_condition(plan, s, Condition::kFixed, seed);
    const auto n = run_condition(plan, s, Condition::kNonFixed, seed);
    for (std::size_t t = 0; t < f.best_so_far.size(); ++t) CHECK(f.best_so_far[t] >= n.best_so_far[t]);
    CHECK(f.final_test_risk <= n.final_test_risk);
  }
}

TEST_CASE("traces follow the nested cross-validation layout") {
  const auto plan = plan_with({sharp("a", 4, 0.01)}, ConstantDefault{0.001});
  const auto t = run_condition(plan, plan.surrogates[0], Condition::kNonFixed, 0);
  REQUIRE(t.folds.size() == 3);
  double test_sum = 0;
  for (const auto& f : t.folds) {
    REQUIRE(f.validation_accuracy.size() == 15);
    const auto best = std::max_element(f.validation_accuracy.begin(), f.validation_accuracy.end());
    CHECK(f.chosen_iteration == static_cast<std::size_t>(best - f.validation_accuracy.begin()));
    test_sum += f.test_risk;
  }
  CHECK(t.final_test_risk == doctest::Approx(test_sum / 3));
  for (std::size_t i = 1; i < t.best_so_far.size(); ++i) CHECK(t.best_so_far[i] >= t.best_so_far[i - 1]);
}

TEST_CASE("parallel and serial experiments are bitwise identical") {
  const auto plan = plan_with({sharp("a", 4, 0.02), sharp("b", 7, 0.02), flat("c", 30, 0.02)},
                              ConstantDefault{0.001});
  const auto ref = run_experiment_serial(plan);
  for (int threads : {1, 2, 3, 8}) {
    const auto got = run_experiment(plan, {threads});
    REQUIRE(got.pairs.size() == ref.pairs.size());
    for (std::size_t i = 0; i < ref.pairs.size(); ++i) {
      CHECK(got.pairs[i].dataset_id == ref.pairs[i].dataset_id);
      CHECK(got.pairs[i].seed_index == ref.pairs[i].seed_index);
      CHECK(got.pairs[i].fixed_risk == ref.pairs[i].fixed_risk);
      CHECK(got.pairs[i].nonfixed_risk == ref.pairs[i].nonfixed_risk);
    }
    for (std::size_t i = 0; i < ref.traces.size(); ++i) CHECK(got.traces[i].best_so_far == ref.traces[i].best_so_far);
  }
}

TEST_CASE("rank curves") {
  const std::vector<RunTrace> better{trace("a", Condition::kFixed, 0, {0.9, 0.9}),
                                     trace("a", Condition::kNonFixed, 0, {0.8, 0.85})};
  auto r = rank_curves(better);
  CHECK(r[0].mean == std::vector<double>{1.0, 1.0});
  CHECK(r[1].mean == std::vector<double>{2.0, 2.0});

  const std::vector<RunTrace> same{trace("a", Condition::kFixed, 0, {0.5, 0.6}),
                                   trace("a", Condition::kNonFixed, 0, {0.5, 0.6})};
  r = rank_curves(same);
  CHECK(r[0].mean == std::vector<double>{1.5, 1.5});
  CHECK(r[1].mean == std::vector<double>{1.5, 1.5});

  const std::vector<RunTrace> split{trace("a", Condition::kFixed, 0, {0.9}),
                                    trace("a", Condition::kNonFixed, 0, {0.8}),
                                    trace("b", Condition::kFixed, 0, {0.7}),
                                    trace("b", Condition::kNonFixed, 0, {0.8})};
  r = rank_curves(split);
  CHECK(r[0].mean[0] == 1.5);
  CHECK(r[1].mean[0] == 1.5);
  CHECK(r[0].sd[0] == 0.5);

  const std::vector<RunTrace> missing{trace("a", Condition::kFixed, 0, {0.9})};
  CHECK_THROWS_AS((void)rank_curves(missing), DataError);
}

TEST_CASE("accuracy curves") {
  const std::vector<RunTrace> one{trace("a", Condition::kFixed, 0, {0.5, 0.7})};
  auto c = accuracy_curves(one);
  REQUIRE(c.size() == 1);
  CHECK(c[0].mean == std::vector<double>{0.5, 0.7});
  CHECK(c[0].sd == std::vector<double>{0.0, 0.0});
  const std::vector<RunTrace> two{trace("a", Condition::kNonFixed, 0, {0.6, 0.6}),
                                  trace("b", Condition::kNonFixed, 0, {0.8, 0.8})};
  c = accuracy_curves(two);
  CHECK(c[0].mean[1] == doctest::Approx(0.7));
  CHECK(c[0].sd[1] == doctest::Approx(0.1));
}

TEST_CASE("plan JSON with a template and generated datasets") {
  const nlohmann::json j = R"({
    "name": "g", "seed": 3,
    "space": {"algorithm": "svm", "params": [
      {"name": "C", "kind": "continuous", "range": [0.03125, 32768], "scale": "log"},
      {"name": "gamma", "kind": "continuous", "range": [3.0517578125e-05, 8], "scale": "log"}]},
    "param": "gamma",
    "default": {"formula": "1/p"},
    "cv": {"outer_folds": 2, "inner_folds": 2, "iterations": 5, "seeds": 2},
    "surrogates": {
      "template": {"noise_sd": 0.01, "terms": [
        {"type": "quadratic", "param": "gamma", "optimum": {"coefficient": 1, "p_exponent": -1}}]},
      "datasets": {"generate": {"count": 4, "n_features": [2, 50], "base_risk": [0.1, 0.2]}}}
  })"_json;
  const auto plan = plan_from_json(j, ".");
  REQUIRE(plan.surrogates.size() == 4);
  for (const auto& s : plan.surrogates) {
    CHECK(s.meta.n_features >= 2);
    CHECK(s.meta.n_features <= 50);
    CHECK(s.base_risk >= 0.1);
    CHECK(s.base_risk <= 0.2);
    CHECK(s.noise_sd == 0.01);
  }
  CHECK(plan.cv.search_iterations == 5);
  const auto again = plan_from_json(j, ".");
  CHECK(again.surrogates[2].meta.n_features == plan.surrogates[2].meta.n_features);

  auto bad = j;
  bad["param"] = "degree";
  CHECK_THROWS_AS((void)plan_from_json(bad, "."), ConfigError);
  bad = j;
  bad["default"] = {{"constant", 100.0}};
  CHECK_THROWS_AS((void)plan_from_json(bad, "."), ConfigError);
  bad = j;
  bad["surrogates"]["template"]["terms"][0]["type"] = "cubic";
  CHECK_THROWS_AS((void)plan_from_json(bad, "."), ConfigError);
  CHECK_THROWS_AS((void)load_plan("/nonexistent/plan.json"), IoError);
}

TEST_CASE("default table from a defaults CSV") {
  testing::TempDir dir("harness");
  testing::write_file(dir / "defaults.csv",
                      "# config-hash: 0\nparam,held_out_dataset,value,support\n"
                      "gamma,a,0.5,3\ngamma,b,0.25,3\nC,a,1,3\n");
  const auto t = load_default_table(dir / "defaults.csv", space().at("gamma"));
  CHECK(t.values.size() == 2);
  CHECK(std::get<double>(t.values.at("b")) == 0.25);
  CHECK_THROWS_AS((void)load_default_table(dir / "defaults.csv", space().at("shrinking")), ConfigError);
}

TEST_CASE("shipped example plans load") {
  for (const auto& entry : std::filesystem::directory_iterator(testing::source_dir() / "data" / "plans")) {
    CAPTURE(entry.path().string());
    const auto plan = load_plan(entry.path());
    CHECK(plan.surrogates.size() == 8);
  }
}
