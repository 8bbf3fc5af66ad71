#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "orthosync/kernels.hpp"
#include "orthosync/model.hpp"

using namespace orthosync;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    best = std::min(best,
                    std::chrono::duration<double>(stop - start).count());
  }
  return best;
}

void bench_case(int n, int d, double c_sigma, int reps) {
  const double sigma = c_sigma * std::sqrt(static_cast<double>(n) / d);
  const SyncProblem p = make_problem(n, d, sigma, 7);
  const BlockStack s = sample_ground_truth(n, d, 8);
  volatile double sink = 0.0;

  struct Row {
    const char* name;
    std::function<void()> serial;
    std::function<void()> parallel;
  };
  const Row rows[] = {
      {"multiply",
       [&] { sink = kernels::reference::multiply(p.observation, s.data)(0, 0); },
       [&] { sink = kernels::multiply(p.observation, s.data)(0, 0); }},
      {"polar_round",
       [&] { sink = kernels::reference::polar_round(s.data, n, d).data(0, 0); },
       [&] { sink = kernels::polar_round(s.data, n, d).data(0, 0); }},
      {"objective",
       [&] { sink = kernels::reference::objective(p.observation, s); },
       [&] { sink = kernels::objective(p.observation, s); }},
      {"gram_residual",
       [&] { sink = kernels::reference::gram_residual_sqnorm(p.observation, s); },
       [&] { sink = kernels::gram_residual_sqnorm(p.observation, s); }},
  };

  std::printf("n=%d d=%d (threads=%d)\n", n, d, omp_get_max_threads());
  std::printf("  %-14s %12s %12s %8s\n", "kernel", "serial [ms]",
              "parallel [ms]", "speedup");
  for (const Row& row : rows) {
    const double ts = time_best_of(reps, row.serial);
    const double tp = time_best_of(reps, row.parallel);
    std::printf("  %-14s %12.3f %12.3f %8.2fx\n", row.name, 1e3 * ts, 1e3 * tp,
                ts / tp);
  }
  (void)sink;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = (argc > 1) ? std::atoi(argv[1]) : 3;
  bench_case(200, 3, 0.2, reps);
  bench_case(400, 5, 0.2, reps);
  return 0;
}
