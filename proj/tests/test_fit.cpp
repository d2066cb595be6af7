#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tunerisk/error.hpp"
#include "tunerisk/fit.hpp"

using namespace tunerisk;

namespace {

std::vector<MetaPoint> generate(double (*f)(double), int count = 30) {
  std::vector<MetaPoint> pts;
  for (int i = 0; i < count; ++i) {
    const double p = std::round(4.0 * std::pow(125.0, i / (count - 1.0)));  // 4 .. 500
    pts.push_back({p, f(p)});
  }
  return pts;
}

}  // namespace

TEST_CASE("family names round trip") {
  for (auto f : {FunctionFamily::kLinear, FunctionFamily::kPower, FunctionFamily::kExpSqrt,
                 FunctionFamily::kConstant, FunctionFamily::kInverse, FunctionFamily::kSqrt}) {
    CHECK(parse_family(to_string(f)) == f);
  }
  CHECK_THROWS_AS((void)parse_family("log(p)"), ConfigError);
  CHECK(evaluate_family(FunctionFamily::kPower, 0.5, 16) == 4.0);
  CHECK(evaluate_family(FunctionFamily::kExpSqrt, 2.0, 9) == 8.0);
  CHECK(evaluate_family(FunctionFamily::kInverse, 123.0, 4) == 0.25);
}

TEST_CASE("Brent minimization of a smooth function") {
  const auto m = minimize_scalar([](double x) { return (x - 2.0) * (x - 2.0) + 1.0; }, -10, 10);
  CHECK(m.x == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(m.fx == doctest::Approx(1.0));
  const auto c = minimize_scalar([](double x) { return std::cos(x); }, 2.0, 4.0);
  CHECK(c.x == doctest::Approx(std::numbers::pi).epsilon(1e-8));
}

TEST_CASE("noiseless power law recovers its exponent") {
  const auto pts = generate([](double p) { return std::pow(p, 0.74); });
  const auto fit = fit_points(pts, FunctionFamily::kPower);
  REQUIRE(fit.coefficient);
  CHECK(std::fabs(*fit.coefficient - 0.74) <= 1e-6);
  CHECK(fit.metrics.rmse < 1e-4);
  CHECK(fit.describe().find("p^0.74") == 0);
}

TEST_CASE("noiseless linear and exp-sqrt families") {
  const auto lin = fit_points(generate([](double p) { return 0.3 * p; }), FunctionFamily::kLinear);
  CHECK(*lin.coefficient == doctest::Approx(0.3).epsilon(1e-9));
  const auto es = fit_points(generate([](double p) { return std::pow(1.05, std::sqrt(p)); }),
                             FunctionFamily::kExpSqrt);
  CHECK(*es.coefficient == doctest::Approx(1.05).epsilon(1e-8));
}

TEST_CASE("constant family is the arithmetic mean") {
  const std::vector<MetaPoint> pts{{2, 1.0}, {5, 4.0}, {9, 2.5}, {11, 0.5}};
  const auto fit = fit_points(pts, FunctionFamily::kConstant);
  CHECK(*fit.coefficient == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("fixed families have metrics but no coefficient") {
  const auto fit = fit_points(generate([](double p) { return 1.1 / p; }), FunctionFamily::kInverse);
  CHECK_FALSE(fit.coefficient);
  CHECK(fit.metrics.rmse > 0.0);
  REQUIRE(fit.metrics.rmsle);
  CHECK(*fit.metrics.rmsle == doctest::Approx(std::log(1.1)).epsilon(1e-12));
  CHECK(fit.to_json().at("coefficient").is_null());
}

TEST_CASE("fit metrics identities") {
  const std::vector<double> y{1, 2, 3, 4, 5};
  auto m = fit_metrics(y, y);
  CHECK(m.rmse == 0.0);
  CHECK(m.r2 == 1.0);
  CHECK(*m.rmsle == 0.0);
  CHECK(*m.lr2 == 1.0);

  const std::vector<double> mean(5, 3.0);
  CHECK(fit_metrics(mean, y).r2 == doctest::Approx(0.0).epsilon(1e-15));

  std::vector<double> doubled;
  for (double v : y) doubled.push_back(2.0 * v);
  CHECK(std::fabs(*fit_metrics(doubled, y).rmsle - std::numbers::ln2) <= 1e-12);

  const std::vector<double> with_zero{0, 1, 2, 3, 4};
  CHECK_THROWS_AS((void)fit_metrics(with_zero, y), DataError);
  CHECK_NOTHROW((void)fit_metrics(with_zero, y, false));
  CHECK(std::isnan(fit_metrics(y, mean).r2));
}

TEST_CASE("meta-feature fit pools top-n values against p") {
  const auto d = HyperparameterDomain::continuous("max_features", 0.0, 1.0);
  ConfigurationSpace space("rf", {d});
  std::vector<PerformanceRecord> recs;
  MetaTable meta;
  for (int p : {4, 9, 16, 25, 36, 64, 100}) {
    const std::string id = "p" + std::to_string(p);
    meta[id] = {id, p, std::nullopt};
    for (int i = 0; i < 3; ++i) {
      recs.push_back({id, Configuration({{"max_features", std::sqrt(p) / p}}), "accuracy",
                      0.9 - 0.01 * i, 0.0});
    }
  }
  const RecordSet rs(space, "accuracy", std::move(recs));
  const auto top = top_n(rs, 3);
  MetaFitOptions opts;
  opts.values_times_p = true;
  const auto fit = fit_meta_function(top, "max_features", meta, FunctionFamily::kPower, space, opts);
  CHECK(*fit.coefficient == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(fit.n_points == 21);
  meta.erase("p9");
  CHECK_THROWS_AS((void)fit_meta_function(top, "max_features", meta, FunctionFamily::kPower, space, opts),
                  DataError);
}
