#pragma once

#include <span>
#include <vector>

#include "astpa/limit_state.hpp"
#include "astpa/rng.hpp"

namespace astpa {

/// Robbins-Monro clamp bounds for the pCN scale. The multiplicative log
/// update is unconstrained; beta itself must stay inside (0, 1].
inline constexpr double kBetaMin = 1e-4;
inline constexpr double kBetaMax = 0.999;

struct PcnConfig {
  double beta0 = 0.5;
  double alpha_star = 0.3;  // target mean acceptance; 0.2-0.4 sensible
  int chain_length = 150;
  double burn_in_fraction = 0.10;
};

struct ChainState {
  std::vector<double> current;
  double current_g = 0.0;
  double current_log_likelihood = 0.0;
  double beta = 0.5;
  int step_index = 1;
  int accept_count = 0;
};

/// One chain's output, in step order (rejections repeat the current state).
struct ChainRun {
  std::vector<std::vector<double>> samples;
  std::vector<double> g_values;        // cached g per retained state
  std::vector<double> log_likelihoods; // cached log l per retained state
  std::vector<char> accepted;          // per-step indicator
  double final_beta = 0.0;
  int accept_count = 0;
  bool stuck_outside_support = false;  // both likelihoods -inf at some step
};

/// x_tilde = sqrt(1 - beta^2) x + beta xi, xi ~ N(0, C). Consumes exactly
/// dim normal variates from the stream.
std::vector<double> pcn_propose(std::span<const double> current, double beta,
                                const GaussianPrior& prior, RngStream& rng);

/// min{1, exp(log_l_proposed - log_l_current)}; 0 when both are -inf.
double pcn_accept_probability(double log_l_proposed, double log_l_current);

/// Robbins-Monro update with step size t^{-1/2}, clamped to [kBetaMin, kBetaMax].
double adapt_beta(double beta_t, double alpha_t, double alpha_star, int t);

/// Runs one pCN chain of config.chain_length steps from seed_point. The
/// seed's g value must be supplied (cached from discovery) so the chain
/// consumes exactly chain_length limit-state evaluations, one per proposal.
ChainRun run_chain(std::span<const double> seed_point, double seed_g,
                   const SmoothedTarget& target, const PcnConfig& config,
                   RngStream& rng);

}  // namespace astpa
