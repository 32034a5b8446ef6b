#include "astpa/pcn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace astpa {

std::vector<double> pcn_propose(std::span<const double> current, double beta,
                                const GaussianPrior& prior, RngStream& rng) {
  const double keep = std::sqrt(1.0 - beta * beta);
  std::vector<double> proposal = prior.sample(rng);
  for (std::size_t i = 0; i < proposal.size(); ++i)
    proposal[i] = keep * current[i] + beta * proposal[i];
  return proposal;
}

double pcn_accept_probability(double log_l_proposed, double log_l_current) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (log_l_proposed == neg_inf && log_l_current == neg_inf) return 0.0;
  if (log_l_proposed >= log_l_current) return 1.0;
  return std::exp(log_l_proposed - log_l_current);
}

double adapt_beta(double beta_t, double alpha_t, double alpha_star, int t) {
  if (t < 1) throw std::invalid_argument("adapt_beta: t must be >= 1");
  const double next = beta_t * std::exp((alpha_t - alpha_star) / std::sqrt(static_cast<double>(t)));
  return std::clamp(next, kBetaMin, kBetaMax);
}

ChainRun run_chain(std::span<const double> seed_point, double seed_g,
                   const SmoothedTarget& target, const PcnConfig& config,
                   RngStream& rng) {
  if (config.chain_length < 1) throw std::invalid_argument("run_chain: chain_length >= 1");
  if (!(config.beta0 > 0.0 && config.beta0 <= 1.0))
    throw std::invalid_argument("run_chain: beta0 must lie in (0, 1]");
  if (!(config.alpha_star > 0.0 && config.alpha_star < 1.0))
    throw std::invalid_argument("run_chain: alpha_star must lie in (0, 1)");

  ChainState state;
  state.current.assign(seed_point.begin(), seed_point.end());
  state.current_g = seed_g;
  state.current_log_likelihood = target.log_likelihood(seed_g);
  state.beta = config.beta0;  // clamped only by adaptation

  const int length = config.chain_length;
  ChainRun run;
  run.samples.reserve(static_cast<std::size_t>(length));
  run.g_values.reserve(static_cast<std::size_t>(length));
  run.log_likelihoods.reserve(static_cast<std::size_t>(length));
  run.accepted.reserve(static_cast<std::size_t>(length));

  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (int t = 1; t <= length; ++t) {
    std::vector<double> proposal = pcn_propose(state.current, state.beta, target.prior(), rng);
    const double g_prop = target.limit_state()(proposal);
    const double log_l_prop = target.log_likelihood(g_prop);
    const double alpha = pcn_accept_probability(log_l_prop, state.current_log_likelihood);
    if (log_l_prop == neg_inf && state.current_log_likelihood == neg_inf)
      run.stuck_outside_support = true;

    const bool accept = rng.uniform() < alpha;
    if (accept) {
      state.current = std::move(proposal);
      state.current_g = g_prop;
      state.current_log_likelihood = log_l_prop;
      ++state.accept_count;
    }
    run.samples.push_back(state.current);
    run.g_values.push_back(state.current_g);
    run.log_likelihoods.push_back(state.current_log_likelihood);
    run.accepted.push_back(accept ? 1 : 0);

    // Adapt every step, burn-in included; burned samples are dropped later.
    state.beta = adapt_beta(state.beta, alpha, config.alpha_star, t);
    state.step_index = t + 1;
  }

  run.final_beta = state.beta;
  run.accept_count = state.accept_count;
  return run;
}

}  // namespace astpa
