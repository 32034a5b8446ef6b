#pragma once

#include <span>
#include <vector>

#include "astpa/gmm.hpp"
#include "astpa/limit_state.hpp"
#include "astpa/rng.hpp"

namespace astpa {

struct NormalizingEstimate {
  double c_hat = 0.0;
  double c_half_1 = 0.0;
  double c_half_2 = 0.0;
  double variance = 0.0;   // all-sample estimator variance
  int m_used = 0;
  long long model_calls = 0;
  bool min_branch = false;  // split rule fell back to min(c1, c2)
};

/// Split robustness rule: average when the halves agree within a factor of
/// 3, otherwise the conservative minimum.
double combine_split_estimates(double c_half_1, double c_half_2, bool* min_branch = nullptr);

/// Unbiased estimator variance over the density ratios (all m samples,
/// independent of which split branch fired).
double variance_of_constant(std::span<const double> ratios, double ratio_mean);

/// Builds the normalizing-constant estimate from precomputed log density
/// ratios log h(x') - log Q(x'), split by draw order.
NormalizingEstimate estimate_from_log_ratios(std::span<const double> log_ratios);

/// Draws m i.i.d. points from Q, forms the ratios h/Q in log space, and
/// applies the split rule. Consumes exactly m limit-state evaluations.
NormalizingEstimate estimate_constant(const SmoothedTarget& target, const GaussianMixture& q,
                                      int m, RngStream& rng);

}  // namespace astpa
