#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "astpa/limit_state.hpp"
#include "astpa/pipeline.hpp"
#include "astpa/rng.hpp"

namespace astpa::benchmarks {

// Limit-state functions, all in standard Gaussian space.
double g_bimodal_convex(std::span<const double> x);
double g_quartic_bimodal(std::span<const double> x);
double g_himmelblau(std::span<const double> x);
double g_changing_topology(std::span<const double> x);

/// 34-story frame: loads 2 + 0.8 x_i kN, stiffnesses 20000 + 4000 x_{34+k}
/// kN m^2, story height 4 m; g = y0 - top displacement in meters. A
/// non-positive story stiffness sum (possible deep in the tail) evaluates
/// the signed formula and is counted as an anomaly.
double g_multistory(std::span<const double> x, double y0,
                    long long* anomaly_count = nullptr);

/// 200-d decic function; gamma controls how many coordinates feed the
/// nonlinear terms. The exp term saturates at 1e300 instead of overflowing;
/// the min structure keeps g finite in the relevant region.
double g_decic(std::span<const double> x, int gamma, long long* saturation_count = nullptr);

/// Validation oracle with exact tail probability Phi(-beta_r).
double g_linear(std::span<const double> x, double beta_r);

/// Tunable parameters for the parameterized benchmarks.
struct BenchmarkParams {
  int gamma = 10;       // decic
  double y0 = 0.22;     // multistory threshold, meters
  double beta_r = 4.0;  // linear oracle
};

struct BenchmarkSpec {
  std::string name;
  int dim = 0;
  double reference_probability = 0.0;
  std::string reference_source;  // provenance of the reference value
  std::function<LimitState()> make_limit_state;
  RunConfig default_config;
};

/// Registry addressable by name: bimodal_convex, quartic_bimodal,
/// himmelblau, changing_topology, multistory, decic, linear.
std::vector<std::string> benchmark_names();
BenchmarkSpec make_benchmark(const std::string& name, const BenchmarkParams& params = {});

struct McResult {
  double p_hat = 0.0;
  double cov = 0.0;  // sqrt((1 - p) / (n p)); undefined (and flagged) at zero hits
  long long hits = 0;
  long long n = 0;
  bool zero_hits = false;
};

/// Crude Monte Carlo reference with deterministic sharding: shard s of the
/// seed always covers the same samples, so the result is independent of the
/// worker count.
McResult crude_monte_carlo(const LimitState& limit_state, long long n, std::uint64_t seed);

/// Adaptive 2-d integration of I{g <= 0} times the standard normal density
/// over [-half_width, half_width]^2, refining cells that straddle the zero
/// level set until their total mass is below rel_tol of the estimate.
double quadrature_reference_2d(const LimitState& limit_state, double half_width = 10.0,
                               double rel_tol = 0.01);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace astpa::benchmarks
