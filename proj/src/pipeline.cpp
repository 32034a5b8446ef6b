#include "astpa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace astpa {

int RunConfig::retained_per_chain() const {
  return static_cast<int>(std::ceil(0.9 * pcn.chain_length));
}

int RunConfig::burn_per_chain() const { return pcn.chain_length - retained_per_chain(); }

RunConfig RunConfig::defaults_for_dim(int dim) {
  RunConfig config;
  if (dim < 20) {
    config.pcn.alpha_star = 0.35;
    config.discovery.p0 = 0.1;
    config.discovery.seed_mode = SeedMode::Weighted;
  } else {
    config.pcn.alpha_star = 0.25;
    config.discovery.p0 = 0.2;
    config.discovery.seed_mode = SeedMode::Uniform;
  }
  return config;
}

std::pair<double, std::vector<double>> shifted_estimate(std::span<const double> g_values,
                                                        const SmoothedTarget& target) {
  if (g_values.empty()) throw std::invalid_argument("shifted_estimate: no samples");
  std::vector<double> weights(g_values.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < g_values.size(); ++i) {
    if (g_values[i] <= 0.0) {
      weights[i] = std::exp(-target.log_likelihood(g_values[i]));
      sum += weights[i];
    }
  }
  return {sum / static_cast<double>(g_values.size()), std::move(weights)};
}

double analytical_cov(double p_tilde, double c_hat, double var_p_tilde, double var_c) {
  if (var_p_tilde < 0.0 || var_c < 0.0)
    throw std::invalid_argument("analytical_cov: negative variance");
  const double p_hat = p_tilde * c_hat;
  if (!(p_hat > 0.0)) throw std::invalid_argument("analytical_cov: p_hat must be positive");
  const double var =
      p_tilde * p_tilde * var_c + c_hat * c_hat * var_p_tilde + var_p_tilde * var_c;
  return std::sqrt(var) / p_hat;
}

namespace {

SmoothedTarget build_target(const LimitState& limit_state, const RunConfig& config) {
  if (config.flat_likelihood) return SmoothedTarget::flat(limit_state);
  if (config.explicit_g_c > 0.0)
    return SmoothedTarget::with_scale(limit_state, config.sigma, config.explicit_g_c);
  return SmoothedTarget(limit_state, config.sigma, config.q);
}

Estimate flagged_failure(std::string reason, long long consumed) {
  Estimate est;
  est.failed = true;
  est.failure_reason = std::move(reason);
  est.n_total = consumed;
  return est;
}

}  // namespace

Estimate run_astpa(const LimitState& limit_state, const RunConfig& config, RngStream& rng) {
  const long long calls_start = limit_state.calls();
  const int dim = limit_state.dim();

  SmoothedTarget target = build_target(limit_state, config);
  const long long calls_after_target = limit_state.calls();

  DiscoveryResult discovery;
  try {
    discovery = discover(limit_state, target, config.discovery, rng);
  } catch (const std::runtime_error& e) {
    return flagged_failure(std::string("discovery: ") + e.what(),
                           limit_state.calls() - calls_start);
  }

  Estimate est;
  est.seeds = discovery.seeds;
  est.discovery_levels = discovery.levels;
  est.n_discovery = (calls_after_target - calls_start) + discovery.model_calls;

  // Chains, burn-in dropped per chain.
  const int n_chains = config.discovery.n_chains;
  const int burn = config.burn_per_chain();
  std::vector<std::vector<std::vector<double>>> retained_chains;
  std::vector<std::vector<double>> retained_g_chains;
  retained_chains.reserve(static_cast<std::size_t>(n_chains));
  long long accepts = 0;
  for (int c = 0; c < n_chains; ++c) {
    const auto sc = static_cast<std::size_t>(c);
    ChainRun run = run_chain(discovery.seeds[sc], discovery.seed_g[sc], target, config.pcn, rng);
    accepts += run.accept_count;
    retained_chains.emplace_back(run.samples.begin() + burn, run.samples.end());
    retained_g_chains.emplace_back(run.g_values.begin() + burn, run.g_values.end());
  }
  est.mean_acceptance = static_cast<double>(accepts) /
                        (static_cast<double>(n_chains) * config.pcn.chain_length);
  est.n_burn = static_cast<long long>(n_chains) * burn;

  std::vector<double> g_all;
  for (const auto& gc : retained_g_chains) g_all.insert(g_all.end(), gc.begin(), gc.end());
  est.n_samples = static_cast<long long>(g_all.size());

  auto [p_tilde, weights] = shifted_estimate(g_all, target);
  est.p_tilde = p_tilde;
  if (p_tilde <= 0.0) {
    est.no_rare_samples = true;
    est.failed = true;
    est.failure_reason = "no chain sample reached the rare event domain";
    est.n_total = limit_state.calls() - calls_start;
    return est;
  }

  EssResult ess = ess_min(retained_chains);
  est.ess_min = ess.ess_min;
  est.constant_dimension = ess.constant_dimension;
  est.thinning = thinning_stride(static_cast<int>(est.n_samples), ess.ess_min);

  // Thin per chain; the thinned set feeds both Var(p_tilde) and the GMM fit.
  std::vector<std::vector<double>> thinned_points;
  std::vector<double> thinned_weights;
  {
    std::size_t offset = 0;
    for (const auto& chain : retained_chains) {
      for (std::size_t i = 0; i < chain.size(); i += static_cast<std::size_t>(est.thinning)) {
        thinned_points.push_back(chain[i]);
        thinned_weights.push_back(weights[offset + i]);
      }
      offset += chain.size();
    }
  }
  est.n_thinned = static_cast<int>(thinned_points.size());

  const double n_s = static_cast<double>(est.n_thinned);
  double var_p = 0.0;
  for (double w : thinned_weights) var_p += (w - est.p_tilde) * (w - est.p_tilde);
  var_p /= n_s * (n_s - 1.0);
  est.var_p_tilde = var_p;

  // IIS: fit Q on the thinned set, then draw fresh i.i.d. points from it.
  // The importance-sampling constant is unbiased for any proposal whose
  // support covers the target, but a proposal fitted on chain samples alone
  // can miss a failure mode the chains never visited. In low dimensions,
  // where weighted seed selection can leave a discovered mode without a
  // chain, two defensive layers guarantee every discovered point carries
  // real proposal mass: the rare-event set joins the EM fit, and a quarter
  // of the mixture weight goes to wide kernels centred at those points with
  // uniform weights, so coverage does not depend on their (possibly tiny)
  // target density. The discovery points shape only the proposal, never the
  // estimator sums. In high dimensions the discovery points lie in the
  // inflated-prior shell far outside the target bulk and would distort the
  // fit, and uniform seed selection already spreads chains over the
  // discovered set, so the plain fitted mixture is used there.
  const bool low_dim = dim < 20;
  std::vector<std::vector<double>> fit_points = thinned_points;
  if (low_dim)
    fit_points.insert(fit_points.end(), discovery.rare_event_samples.begin(),
                      discovery.rare_event_samples.end());
  try {
    const CovarianceType cov_type = low_dim ? CovarianceType::Full : CovarianceType::Diagonal;
    GaussianMixture fitted = [&] {
      if (config.gmm_components > 0)
        return GaussianMixture::fit(fit_points, config.gmm_components, cov_type, rng);
      if (low_dim) {
        // ~10 components in low dimensions, capped when the thinned fit set is small.
        const int k = std::clamp(est.n_thinned / 5, 1, 10);
        return GaussianMixture::fit(fit_points, k, cov_type, rng);
      }
      return GaussianMixture::fit_bic(fit_points, 3, cov_type, rng);
    }();

    GaussianMixture q = [&] {
      if (!low_dim) return fitted;
      constexpr double kDefensiveWeight = 0.25;
      constexpr double kKernelVariance = 4.0;
      std::vector<double> mix_w;
      std::vector<std::vector<double>> mix_mu;
      std::vector<std::vector<double>> mix_cov;
      for (std::size_t c = 0; c < fitted.weights().size(); ++c) {
        mix_w.push_back((1.0 - kDefensiveWeight) * fitted.weights()[c]);
        mix_mu.push_back(fitted.means()[c]);
        mix_cov.push_back(fitted.covariances()[c]);
      }
      std::vector<double> kernel_cov(static_cast<std::size_t>(dim) * dim, 0.0);
      for (int i = 0; i < dim; ++i)
        kernel_cov[static_cast<std::size_t>(i) * dim + i] = kKernelVariance;
      const auto& pool = discovery.rare_event_samples;
      for (const auto& point : pool) {
        mix_w.push_back(kDefensiveWeight / static_cast<double>(pool.size()));
        mix_mu.push_back(point);
        mix_cov.push_back(kernel_cov);
      }
      double w_sum = 0.0;
      for (double w : mix_w) w_sum += w;
      for (double& w : mix_w) w /= w_sum;
      return GaussianMixture(std::move(mix_w), std::move(mix_mu), std::move(mix_cov), cov_type);
    }();

    int m = config.m_iis > 0 ? config.m_iis
                             : static_cast<int>(std::lround(0.3 * static_cast<double>(est.n_samples)));
    if (m % 2 != 0) ++m;
    m = std::max(m, 2);
    NormalizingEstimate c_est = estimate_constant(target, q, m, rng);
    est.c_hat = c_est.c_hat;
    est.var_c = c_est.variance;
    est.m_iis = c_est.model_calls;
    est.iis_min_branch = c_est.min_branch;
  } catch (const std::exception& e) {
    Estimate failure = flagged_failure(std::string("iis: ") + e.what(),
                                       limit_state.calls() - calls_start);
    failure.p_tilde = est.p_tilde;
    return failure;
  }

  est.p_hat = est.p_tilde * est.c_hat;
  est.analytical_cov = analytical_cov(est.p_tilde, est.c_hat, est.var_p_tilde, est.var_c);
  est.n_total = est.n_discovery + est.n_burn + est.n_samples + est.m_iis;

  const long long counter_delta = limit_state.calls() - calls_start;
  if (est.n_total != counter_delta)
    throw std::logic_error("run_astpa: budget accounting does not match the call counter");
  return est;
}

std::vector<Estimate> run_replications(const std::function<LimitState()>& make_limit_state,
                                       const RunConfig& config, int replications,
                                       std::uint64_t master_seed, int workers) {
  if (replications < 1) throw std::invalid_argument("run_replications: need >= 1 replication");
  std::vector<Estimate> results(static_cast<std::size_t>(replications));

#ifdef _OPENMP
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (int r = 0; r < replications; ++r) {
    RngStream stream(derive_seed(master_seed, static_cast<std::uint64_t>(r)));
    LimitState limit_state = make_limit_state();  // private counter per replication
    try {
      results[static_cast<std::size_t>(r)] = run_astpa(limit_state, config, stream);
    } catch (const std::exception& e) {
      results[static_cast<std::size_t>(r)] =
          flagged_failure(std::string("run: ") + e.what(), limit_state.calls());
    }
  }
  return results;
}

Aggregate aggregate_estimates(const std::vector<Estimate>& estimates) {
  Aggregate agg;
  agg.replications = static_cast<int>(estimates.size());
  double sum_p = 0.0;
  double sum_cov = 0.0;
  double sum_ntotal = 0.0;
  int ok = 0;
  for (const auto& est : estimates) {
    sum_ntotal += static_cast<double>(est.n_total);
    if (est.failed) {
      ++agg.failures;
      continue;
    }
    sum_p += est.p_hat;
    sum_cov += est.analytical_cov;
    ++ok;
  }
  agg.mean_n_total = sum_ntotal / std::max(1, agg.replications);
  if (ok > 0) {
    agg.mean_p = sum_p / ok;
    agg.mean_analytical_cov = sum_cov / ok;
  }
  if (ok > 1 && agg.mean_p > 0.0) {
    double ss = 0.0;
    for (const auto& est : estimates) {
      if (est.failed) continue;
      ss += (est.p_hat - agg.mean_p) * (est.p_hat - agg.mean_p);
    }
    agg.sampling_cov = std::sqrt(ss / (ok - 1)) / agg.mean_p;
  }
  return agg;
}

}  // namespace astpa
