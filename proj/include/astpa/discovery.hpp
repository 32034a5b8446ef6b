#pragma once

#include <span>
#include <vector>

#include "astpa/limit_state.hpp"
#include "astpa/rng.hpp"

namespace astpa {

enum class SeedMode { Weighted, Uniform };

struct DiscoveryConfig {
  int n_level = 300;
  double p0 = 0.1;        // conditional level probability
  double epsilon = 4.0;   // initial dispersion, N(0, eps I)
  int n_chains = 10;
  SeedMode seed_mode = SeedMode::Weighted;
  int max_levels = 30;
};

struct DiscoveryResult {
  std::vector<std::vector<double>> rare_event_samples;  // all with g <= 0
  std::vector<double> rare_event_g;                     // matching g values
  std::vector<double> thresholds;                       // lambda_1 >= ... >= lambda_M
  std::vector<std::vector<double>> seeds;               // n_chains selected points
  std::vector<double> seed_g;                           // cached g per seed
  long long model_calls = 0;
  int levels = 0;  // loop iterations past the initial set
};

/// Rank statistic at ceil(p0 * n) of the ascending-sorted values (no
/// interpolation).
double intermediate_threshold(std::vector<double> g_values, double p0);

/// Acceptance factor of the reciprocal-prior kernel before the level
/// indicator: min{1, (pi(x_t)/pi(x_tilde))^2} = min{1, exp(|x_tilde|^2 - |x_t|^2)}
/// for the unit-covariance prior.
double reciprocal_accept_factor(double norm2_current, double norm2_proposed);

/// One MH step targeting the synthetic density ~ I{g <= lambda_j} / pi(x)
/// with the pCN proposal. The prior-ratio factor is checked before g is
/// evaluated, so a rejection there costs no model call. Returns the next
/// state and its g value; alpha_out reports the acceptance value used for
/// Robbins-Monro adaptation.
struct ReciprocalStepResult {
  std::vector<double> point;
  double g = 0.0;
  double alpha = 0.0;
  bool accepted = false;
};
ReciprocalStepResult reciprocal_conditional_step(std::span<const double> current,
                                                 double current_g, double lambda_j,
                                                 double beta, const LimitState& limit_state,
                                                 const GaussianPrior& unit_prior,
                                                 RngStream& rng);

/// Multi-level discovery of the rare event domain (reciprocal conditional
/// sampling), returning rare-event samples and the selected chain seeds.
DiscoveryResult discover(const LimitState& limit_state, const SmoothedTarget& target,
                         const DiscoveryConfig& config, RngStream& rng);

/// Samples n indices without replacement with Pr ~ exp(log_weights[i]),
/// renormalized after each pick; log-space throughout so weights are
/// scale-free.
std::vector<int> select_weighted_indices(std::span<const double> log_weights, int n,
                                         RngStream& rng);

/// Seed selection from a rare-event sample set. Weighted mode uses the
/// target value at each cached g (no model calls); uniform mode ignores it.
std::vector<int> select_seed_indices(const std::vector<std::vector<double>>& rare_samples,
                                     std::span<const double> rare_g,
                                     const SmoothedTarget& target, int n_chains,
                                     SeedMode mode, RngStream& rng);

}  // namespace astpa
