#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "doctest.h"
#include "support.hpp"
#include "tunerisk/error.hpp"
#include "tunerisk/pipeline.hpp"

using namespace tunerisk;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  const auto dir = testing::source_dir() / "data" / "synthetic";
  auto j = read_json_file(dir / "pipeline.json");
  j["cv"] = {{"outer_folds", 3}, {"inner_folds", 2}, {"iterations", 15}, {"seeds", 2}};
  j["params"] = {"gamma", "shrinking"};
  return pipeline_config_from_json(j, dir);
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(TUNERISK_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return status == 0 ? 0 : 1;
}

}  // namespace

TEST_CASE("pipeline over the synthetic bundle") {
  testing::TempDir a("pipe-a");
  testing::TempDir b("pipe-b");
  const auto config = small_config();
  const auto ra = run_pipeline(config, a.path(), {1});
  const auto rb = run_pipeline(config, b.path(), {4});
  REQUIRE(ra.rows.size() == 2);
  CHECK(ra.rows[0].param == "gamma");
  CHECK(ra.rows[1].param == "shrinking");
  CHECK(ra.hash.size() == 16);
  CHECK(ra.hash == rb.hash);

  for (const auto& row : ra.rows) CHECK(row.test.rejected.has_value());
  // A 1/p default sits at the simulated optimum; shrinking has no effect.
  CHECK(ra.rows[0].risk.d < 0.01);
  CHECK(std::fabs(ra.rows[1].risk.d) < 0.005);

  const auto fa = files_under(a.path());
  CHECK(fa == files_under(b.path()));
  CHECK(std::find(fa.begin(), fa.end(), fs::path("fit_gamma.json")) != fa.end());
  CHECK(std::find(fa.begin(), fa.end(), fs::path("summary.csv")) != fa.end());
  for (const auto& rel : fa) {
    CAPTURE(rel.string());
    const auto text = testing::read_file(a.path() / rel);
    CHECK(text == testing::read_file(b.path() / rel));
    if (rel.extension() == ".csv") {
      CHECK(text.rfind("# config-hash: " + ra.hash + "\n", 0) == 0);
    } else {
      CHECK(nlohmann::json::parse(text).at("config_hash") == ra.hash);
    }
  }
}

TEST_CASE("the config hash follows the inputs") {
  testing::TempDir a("hash-a");
  testing::TempDir b("hash-b");
  auto config = small_config();
  config.params = {"shrinking"};
  config.fits.clear();
  const auto h1 = run_pipeline(config, a.path(), {}).hash;
  config.delta = 0.02;
  config.source["delta"] = 0.02;
  CHECK(run_pipeline(config, b.path(), {}).hash != h1);
}

TEST_CASE("pipeline config errors") {
  const auto dir = testing::source_dir() / "data" / "synthetic";
  auto j = read_json_file(dir / "pipeline.json");
  j.erase("meta");
  CHECK_THROWS_AS((void)pipeline_config_from_json(j, dir), ConfigError);  // fits need meta
  j = read_json_file(dir / "pipeline.json");
  j["params"] = {"kernel"};
  testing::TempDir out("pipe-err");
  CHECK_THROWS_AS((void)run_pipeline(pipeline_config_from_json(j, dir), out.path()), ConfigError);
  CHECK_THROWS_AS((void)read_json_file("/nonexistent/x.json"), IoError);
}

TEST_CASE("free parameters skip fixed and single-valued domains") {
  const auto space = load_space(testing::source_dir() / "data" / "spaces" / "svm_rbf.json");
  CHECK(free_parameters(space) == std::vector<std::string>{"C", "gamma", "shrinking", "tol"});
}

TEST_CASE("cli: a missing records file is reported by path") {
  testing::TempDir dir("cli");
  const auto space = testing::source_dir() / "data" / "spaces" / "svm_rbf.json";
  const auto missing = dir / "no_such_records.csv";
  CHECK(run_cli("defaults --records " + missing.string() + " --space " + space.string() + " --out " +
                    (dir / "o").string(),
                dir / "log") != 0);
  const auto log = testing::read_file(dir / "log");
  CHECK(log.find("no_such_records.csv") != std::string::npos);
}

TEST_CASE("cli: risk and test on a pairs file") {
  testing::TempDir dir("cli");
  std::string pairs = "# config-hash: 0\nparam,dataset_id,seed,fixed_risk,nonfixed_risk\n";
  for (int i = 0; i < 10; ++i) {
    pairs += "gamma,d" + std::to_string(i) + ",0," + std::to_string(0.2 - 0.001 * i) + ",0.2\n";
  }
  testing::write_file(dir / "pairs.csv", pairs);
  REQUIRE(run_cli("risk --pairs " + (dir / "pairs.csv").string() + " --out " + (dir / "r").string(),
                  dir / "log") == 0);
  const auto risk = testing::read_file(dir / "r" / "risk_summary.csv");
  CHECK(risk.rfind("# config-hash: ", 0) == 0);
  CHECK(risk.find("gamma,") != std::string::npos);

  REQUIRE(run_cli("test --pairs " + (dir / "pairs.csv").string() + " --out " + (dir / "t").string(),
                  dir / "log") == 0);
  const auto test = testing::read_file(dir / "t" / "test.csv");
  CHECK(test.find(",rejected") != std::string::npos);

  CHECK(run_cli("test --pairs " + (dir / "pairs.csv").string() + " --out " + (dir / "t2").string() +
                    " --alpha 2",
                dir / "log") != 0);
}

TEST_CASE("cli: simulate then defaults") {
  testing::TempDir dir("cli");
  const auto cfg = testing::source_dir() / "data" / "synthetic" / "pipeline.json";
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --records-out " + (dir / "r.csv").string() +
                      " --meta-out " + (dir / "m.csv").string() + " --samples 20",
                  dir / "log") == 0);
  const auto space = testing::source_dir() / "data" / "spaces" / "svm_rbf.json";
  REQUIRE(run_cli("defaults --records " + (dir / "r.csv").string() + " --space " + space.string() +
                      " --n 5 --param gamma --meta " + (dir / "m.csv").string() +
                      " --family power --out " + (dir / "d").string(),
                  dir / "log") == 0);
  CHECK(fs::exists(dir / "d" / "defaults.csv"));
  CHECK(fs::exists(dir / "d" / "fit_gamma.json"));
}
