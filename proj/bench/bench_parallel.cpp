// Compares the serial reference execution (workers = 1) against the
// OpenMP-parallel path on the same workloads, checking that results are
// identical and reporting wall-clock times.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "astpa/benchmarks.hpp"
#include "astpa/pipeline.hpp"

using namespace astpa;
using namespace astpa::benchmarks;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

int main() {
  int failures = 0;
  std::printf("threads available: %d\n\n", max_threads());

  {
    BenchmarkSpec spec = make_benchmark("bimodal_convex");
    const int reps = 40;

    const double t0 = now_seconds();
    auto serial = run_replications(spec.make_limit_state, spec.default_config, reps, 11, 1);
    const double t1 = now_seconds();
    auto parallel = run_replications(spec.make_limit_state, spec.default_config, reps, 11, 0);
    const double t2 = now_seconds();

    bool identical = true;
    for (int r = 0; r < reps; ++r) {
      const auto& a = serial[static_cast<std::size_t>(r)];
      const auto& b = parallel[static_cast<std::size_t>(r)];
      if (a.p_hat != b.p_hat || a.n_total != b.n_total) identical = false;
    }
    std::printf("replications (%d reps, bimodal_convex)\n", reps);
    std::printf("  serial   %.3f s\n  parallel %.3f s  speedup %.2fx\n", t1 - t0,
                t2 - t1, (t1 - t0) / (t2 - t1));
    std::printf("  results identical: %s\n\n", identical ? "yes" : "NO");
    if (!identical) ++failures;
  }

  {
    LimitState g = make_benchmark("linear").make_limit_state();
    const long long n = 20'000'000;

    const double t0 = now_seconds();
#ifdef _OPENMP
    omp_set_num_threads(1);
#endif
    McResult serial = crude_monte_carlo(g, n, 3);
    const double t1 = now_seconds();
#ifdef _OPENMP
    omp_set_num_threads(max_threads());
#endif
    McResult parallel = crude_monte_carlo(g, n, 3);
    const double t2 = now_seconds();

    const bool identical = serial.hits == parallel.hits;
    std::printf("crude Monte Carlo (n = %lld, linear)\n", n);
    std::printf("  serial   %.3f s\n  parallel %.3f s  speedup %.2fx\n", t1 - t0,
                t2 - t1, (t1 - t0) / (t2 - t1));
    std::printf("  hit counts identical: %s\n", identical ? "yes" : "NO");
    if (!identical) ++failures;
  }

  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
