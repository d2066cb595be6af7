// Times run_experiment_serial against the OpenMP run_experiment on one plan
// and checks that both produce the same pairs.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include "tunerisk/error.hpp"
#include "tunerisk/harness.hpp"
#include "tunerisk/pipeline.hpp"

using namespace tunerisk;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: bench_experiment PLAN.json [repeats]\n";
    return 2;
  }
  const int repeats = argc > 2 ? std::stoi(argv[2]) : 3;
  try {
    const auto plan = load_plan(argv[1]);
    const auto options = execution_options_from_env();
    ExperimentResult serial;
    ExperimentResult parallel;
    double best_serial = 1e300;
    double best_parallel = 1e300;
    for (int r = 0; r < repeats; ++r) {
      best_serial = std::min(best_serial, seconds([&] { serial = run_experiment_serial(plan); }));
      best_parallel =
          std::min(best_parallel, seconds([&] { parallel = run_experiment(plan, options); }));
    }
    bool same = serial.pairs.size() == parallel.pairs.size();
    for (std::size_t i = 0; same && i < serial.pairs.size(); ++i) {
      same = serial.pairs[i].fixed_risk == parallel.pairs[i].fixed_risk &&
             serial.pairs[i].nonfixed_risk == parallel.pairs[i].nonfixed_risk;
    }
    std::printf("cells      %zu\n", serial.traces.size());
    std::printf("serial     %.4f s\n", best_serial);
    std::printf("parallel   %.4f s\n", best_parallel);
    std::printf("speedup    %.2fx\n", best_serial / best_parallel);
    std::printf("identical  %s\n", same ? "yes" : "NO");
    return same ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "bench_experiment: " << e.what() << "\n";
    return 1;
  }
}
