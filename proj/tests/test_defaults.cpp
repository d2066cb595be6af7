#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "tunerisk/defaults.hpp"
#include "tunerisk/error.hpp"

using namespace tunerisk;

namespace {

// Order statistic k (0-based) found by counting rather than sorting.
double kth_by_counting(const std::vector<double>& xs, std::size_t k) {
  for (double v : xs) {
    std::size_t less = 0, leq = 0;
    for (double y : xs) {
      less += y < v ? 1 : 0;
      leq += y <= v ? 1 : 0;
    }
    if (less <= k && k < leq) return v;
  }
  throw std::logic_error("no order statistic");
}

double brute_quartile(const std::vector<double>& xs, double q) {
  const double h = static_cast<double>(xs.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double a = kth_by_counting(xs, lo);
  if (lo + 1 >= xs.size()) return a;
  return a + (h - static_cast<double>(lo)) * (kth_by_counting(xs, lo + 1) - a);
}

struct Row {
  std::string dataset;
  Value value;
  double risk;
};

RecordSet records_for(const HyperparameterDomain& d, const std::vector<Row>& rows) {
  ConfigurationSpace space("toy", {d});
  std::vector<PerformanceRecord> recs;
  for (const auto& r : rows) {
    recs.push_back({r.dataset, Configuration({{d.name(), r.value}}), "error_rate", r.risk, 0.0});
  }
  return RecordSet(space, "error_rate", std::move(recs));
}

std::string id(int j) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "d%03d", j);
  return buf;
}

}  // namespace

TEST_CASE("top-n keeps the n lowest risks") {
  const auto d = HyperparameterDomain::continuous("x", 0, 1);
  const auto rs = records_for(d, {{"a", 0.3, 0.3}, {"a", 0.1, 0.1}, {"a", 0.2, 0.2}});
  const auto top = top_n(rs, 2);
  REQUIRE(top.entries.at("a").size() == 2);
  CHECK(top.entries.at("a")[0].risk == 0.1);
  CHECK(top.entries.at("a")[1].risk == 0.2);
  CHECK_THROWS_AS((void)top_n(rs, 4), DataError);
}

TEST_CASE("top-n ties resolve in canonical serialization order") {
  const auto d = HyperparameterDomain::continuous("x", 0, 1);
  const auto rs = records_for(d, {{"a", 0.9, 0.5}, {"a", 0.15, 0.5}, {"a", 0.3, 0.5}});
  const auto top = top_n(rs, 2);
  CHECK(std::get<double>(top.entries.at("a")[0].configuration.at("x")) == 0.15);
  CHECK(std::get<double>(top.entries.at("a")[1].configuration.at("x")) == 0.3);
}

TEST_CASE("top-n total is M times n") {
  const auto d = HyperparameterDomain::continuous("x", 0, 1);
  std::vector<Row> rows;
  for (int j = 0; j < 59; ++j) {
    for (int i = 0; i < 12; ++i) rows.push_back({id(j), i / 12.0, (i * 7 % 12) / 12.0});
  }
  CHECK(top_n(records_for(d, rows), 10).total() == 590);
}

TEST_CASE("Freedman-Diaconis width on hand-computed quartiles") {
  const std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(fd_bin_width(xs) == 3.5);
  CHECK(fd_bin_width(std::vector<double>{4, 4, 4, 4}) == 0.0);
  CHECK_THROWS_AS((void)fd_bin_width(std::vector<double>{}), DataError);
}

TEST_CASE("Freedman-Diaconis width matches a counting quartile oracle") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> size(2, 150);
    std::normal_distribution<double> val(0.0, 3.0);
    std::vector<double> xs(static_cast<std::size_t>(size(gen)));
    for (auto& x : xs) x = val(gen);
    const double iqr = brute_quartile(xs, 0.75) - brute_quartile(xs, 0.25);
    const double expect = 2.0 * iqr / std::cbrt(static_cast<double>(xs.size()));
    CHECK(fd_bin_width(xs) == expect);
  }
}

TEST_CASE("Freedman-Diaconis width is shift invariant and scale equivariant") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> size(4, 120);
    std::uniform_int_distribution<int> val(-500, 500);
    std::vector<double> xs(static_cast<std::size_t>(size(gen)));
    for (auto& x : xs) x = val(gen);
    const double b = fd_bin_width(xs);
    auto shifted = xs;
    for (auto& x : shifted) x += 37.0;
    CHECK(fd_bin_width(shifted) == b);
    auto scaled = xs;
    for (auto& x : scaled) x *= 0.125;
    CHECK(fd_bin_width(scaled) == 0.125 * b);
    auto general = xs;
    for (auto& x : general) x *= 3.7;
    CHECK(fd_bin_width(general) == doctest::Approx(3.7 * b).epsilon(1e-12));
  }
}

TEST_CASE("categorical mode and its tie rule") {
  const auto d = HyperparameterDomain::nominal("criterion", {"gini", "entropy"});
  // Pool without "h": two of each, entropy with the lower mean risk.
  const auto rs = records_for(d, {{"a", std::string("gini"), 0.30},
                                  {"a", std::string("entropy"), 0.10},
                                  {"b", std::string("gini"), 0.30},
                                  {"b", std::string("entropy"), 0.10},
                                  {"h", std::string("gini"), 0.0},
                                  {"h", std::string("gini"), 0.0}});
  const auto top = top_n(rs, 2);
  const auto got = derive_default(top, "criterion", "h", rs.space());
  CHECK(std::get<std::string>(got.value) == "entropy");
  CHECK(got.support == 2);
  CHECK(got.pool_size == 4);
  CHECK_FALSE(got.bin);
  // With "h" pooled, gini wins on count.
  CHECK(std::get<std::string>(derive_default(top, "criterion", "a", rs.space()).value) == "gini");
}

TEST_CASE("equal counts and equal risks fall back to canonical order") {
  const auto d = HyperparameterDomain::boolean("bootstrap");
  const auto rs = records_for(d, {{"a", true, 0.2}, {"a", false, 0.2}, {"b", true, 0.2},
                                  {"b", false, 0.2}, {"c", true, 0.2}, {"c", false, 0.2}});
  const auto got = derive_default(top_n(rs, 2), "bootstrap", "c", rs.space());
  CHECK(format_value(got.value) == "false");  // lexicographic text order
}

TEST_CASE("small integer domains use the plain mode with zero variance") {
  const auto d = HyperparameterDomain::integer("min_samples_leaf", 1, 20);
  std::vector<Row> rows;
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<int> other(2, 20);
  for (int j = 0; j < 12; ++j) {
    for (int i = 0; i < 10; ++i) {
      const std::int64_t v = i < 6 ? 1 : other(gen);
      rows.push_back({id(j), v, 0.01 * i});
    }
  }
  const auto rs = records_for(d, rows);
  const auto all = derive_all_defaults(top_n(rs, 10), "min_samples_leaf", rs.space());
  REQUIRE(all.size() == 12);
  for (const auto& a : all) CHECK(std::get<std::int64_t>(a.value) == 1);
}

TEST_CASE("large integer domains are binned and rounded") {
  const auto d = HyperparameterDomain::integer("trees", 1, 1000);
  std::vector<Row> rows;
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> uni(1, 1000);
  std::uniform_int_distribution<int> spike(395, 405);
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < 30; ++i) {
      const std::int64_t v = i < 12 ? spike(gen) : uni(gen);
      rows.push_back({id(j), v, 0.001 * i});
    }
  }
  const auto rs = records_for(d, rows);
  const auto got = derive_default(top_n(rs, 30), "trees", id(0), rs.space());
  REQUIRE(got.bin);
  const auto v = std::get<std::int64_t>(got.value);
  CHECK(got.bin->first <= 400.0);
  CHECK(got.bin->second >= 400.0);
  CHECK(v >= 1);
  CHECK(v <= 1000);
}

TEST_CASE("continuous spike is recovered by the winning bin") {
  const auto d = HyperparameterDomain::continuous("max_features", 0, 1);
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_real_distribution<double> spike(0.69, 0.71);
  std::vector<Row> rows;
  for (int j = 0; j < 10; ++j) {
    for (int i = 0; i < 20; ++i) rows.push_back({id(j), i < 6 ? spike(gen) : uni(gen), uni(gen)});
  }
  const auto rs = records_for(d, rows);
  const auto got = derive_default(top_n(rs, 20), "max_features", id(0), rs.space());
  REQUIRE(got.bin);
  CHECK(got.bin->first <= 0.70);
  CHECK(0.70 < got.bin->second);
  const double v = std::get<double>(got.value);
  CHECK(v == doctest::Approx(0.5 * (got.bin->first + got.bin->second)));
}

TEST_CASE("log-domain defaults are scale equivariant") {
  const auto d = HyperparameterDomain::continuous("C", 1e-6, 1e6, Scale::kLog);
  std::mt19937_64 gen(8);
  std::normal_distribution<double> ln(0.0, 2.0);
  for (double lambda : {4.0, 0.01, 123.0}) {
    std::vector<Row> base, scaled;
    for (int j = 0; j < 8; ++j) {
      for (int i = 0; i < 10; ++i) {
        const double v = std::exp(ln(gen));
        base.push_back({id(j), v, 0.01 * i});
        scaled.push_back({id(j), lambda * v, 0.01 * i});
      }
    }
    const auto rb = records_for(d, base);
    const auto rsc = records_for(d, scaled);
    const auto a = derive_default(top_n(rb, 10), "C", id(3), rb.space());
    const auto b = derive_default(top_n(rsc, 10), "C", id(3), rsc.space());
    CHECK(std::get<double>(b.value) == doctest::Approx(lambda * std::get<double>(a.value)).epsilon(1e-9));
    CHECK(a.support == b.support);
  }
}

TEST_CASE("held-out records never influence their own default") {
  const auto d = HyperparameterDomain::continuous("x", 0, 1);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Row> rows;
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < 10; ++i) rows.push_back({id(j), uni(gen), uni(gen)});
  }
  const auto rs = records_for(d, rows);
  const auto before = derive_default(top_n(rs, 10), "x", id(2), rs.space());
  for (auto& r : rows) {
    if (r.dataset == id(2)) r.value = 0.999;
  }
  const auto rp = records_for(d, rows);
  const auto after = derive_default(top_n(rp, 10), "x", id(2), rp.space());
  CHECK(before.value == after.value);
  CHECK(before.support == after.support);
}

TEST_CASE("leave-one-out needs two other datasets") {
  const auto d = HyperparameterDomain::boolean("b");
  const auto rs = records_for(d, {{"a", true, 0.1}, {"b", false, 0.1}});
  CHECK_THROWS_AS((void)derive_default(top_n(rs, 1), "b", "a", rs.space()), DataError);
  CHECK_NOTHROW((void)derive_default(top_n(rs, 1), "b", "zzz", rs.space()));
}

TEST_CASE("parallel and serial leave-one-out agree exactly") {
  const auto d = HyperparameterDomain::continuous("g", 1e-5, 10, Scale::kLog);
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> ln(std::log(1e-5), std::log(10.0));
  std::vector<Row> rows;
  for (int j = 0; j < 40; ++j) {
    for (int i = 0; i < 15; ++i) rows.push_back({id(j), std::exp(ln(gen)), 0.01 * i});
  }
  const auto rs = records_for(d, rows);
  const auto top = top_n(rs, 10);
  const auto par = derive_all_defaults(top, "g", rs.space());
  const auto ser = derive_all_defaults_serial(top, "g", rs.space());
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].held_out_dataset == ser[i].held_out_dataset);
    CHECK(par[i].value == ser[i].value);
    CHECK(par[i].support == ser[i].support);
    CHECK(par[i].mean_risk == ser[i].mean_risk);
  }
}

TEST_CASE("histogram counts add up to the pooled size") {
  const auto d = HyperparameterDomain::continuous("x", 0, 1);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Row> rows;
  for (int j = 0; j < 5; ++j) {
    for (int i = 0; i < 10; ++i) rows.push_back({id(j), uni(gen), uni(gen)});
  }
  const auto rs = records_for(d, rows);
  const auto top = top_n(rs, 10);
  const auto bins = top_n_histogram(top, "x", rs.space());
  std::size_t total = 0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    total += bins[k].count;
    CHECK(bins[k].lo < bins[k].hi);
    if (k > 0) CHECK(bins[k].lo == doctest::Approx(bins[k - 1].hi));
  }
  CHECK(total == top.total());
}
