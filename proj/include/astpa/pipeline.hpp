#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "astpa/discovery.hpp"
#include "astpa/diagnostics.hpp"
#include "astpa/gmm.hpp"
#include "astpa/iis.hpp"
#include "astpa/limit_state.hpp"
#include "astpa/pcn.hpp"
#include "astpa/rng.hpp"

namespace astpa {

struct RunConfig {
  double sigma = 0.3;
  double q = 4.0;
  double explicit_g_c = 0.0;  // > 0 bypasses the g(0)/q rule
  bool flat_likelihood = false;  // l == 1, sampler validation only

  DiscoveryConfig discovery;
  PcnConfig pcn;
  int m_iis = 0;          // 0 -> round(0.3 N), rounded up to even
  int gmm_components = 0; // 0 -> 10 full for d < 20, BIC over {1,2,3} diagonal otherwise

  /// Derived sample counts for n_chains chains of chain_length steps.
  int retained_per_chain() const;
  int burn_per_chain() const;

  /// Dimension-dependent defaults: alpha_star, p0, seed mode.
  static RunConfig defaults_for_dim(int dim);
};

struct Estimate {
  double p_hat = 0.0;
  double p_tilde = 0.0;
  double c_hat = 0.0;
  double var_p_tilde = 0.0;
  double var_c = 0.0;
  double analytical_cov = 0.0;

  long long n_total = 0;
  long long n_discovery = 0;  // includes the g(0) scaling evaluation
  long long n_burn = 0;
  long long n_samples = 0;    // N
  long long m_iis = 0;        // M

  int thinning = 0;      // stride j
  double ess_min = 0.0;
  int n_thinned = 0;     // N_s
  double mean_acceptance = 0.0;
  int discovery_levels = 0;

  bool failed = false;
  std::string failure_reason;
  std::vector<std::vector<double>> seeds;  // chain starting points (diagnostic)
  bool iis_min_branch = false;
  bool constant_dimension = false;
  bool no_rare_samples = false;
};

/// Weighted-indicator estimate of Eq-style pi/h = 1/l: returns p_tilde and
/// the per-sample weights I{g <= 0} / l(g). Uses only cached g values.
std::pair<double, std::vector<double>> shifted_estimate(std::span<const double> g_values,
                                                        const SmoothedTarget& target);

/// Coefficient of variation of p_hat from the two factor variances.
double analytical_cov(double p_tilde, double c_hat, double var_p_tilde, double var_c);

/// The full guided pCN run: discovery -> chains -> shifted estimate -> GMM +
/// IIS -> final probability, with budget accounting verified against the
/// model call counter. Failures (discovery, fit) are returned as flagged
/// estimates carrying their consumed budget.
Estimate run_astpa(const LimitState& limit_state, const RunConfig& config, RngStream& rng);

struct Aggregate {
  double mean_p = 0.0;
  double sampling_cov = 0.0;      // over successful replications
  double mean_analytical_cov = 0.0;
  double mean_n_total = 0.0;      // over all replications
  int replications = 0;
  int failures = 0;
};

/// Independent replications with per-replication streams derived from the
/// master seed by a counter scheme, so results do not depend on the worker
/// count. Results are returned in replication order.
std::vector<Estimate> run_replications(const std::function<LimitState()>& make_limit_state,
                                       const RunConfig& config, int replications,
                                       std::uint64_t master_seed, int workers = 0);

Aggregate aggregate_estimates(const std::vector<Estimate>& estimates);

}  // namespace astpa
