#include "astpa/iis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace astpa {

double combine_split_estimates(double c_half_1, double c_half_2, bool* min_branch) {
  const double ratio = c_half_2 != 0.0 ? c_half_1 / c_half_2
                                       : std::numeric_limits<double>::infinity();
  const bool agree = ratio >= 1.0 / 3.0 && ratio <= 3.0;
  if (min_branch) *min_branch = !agree;
  return agree ? 0.5 * (c_half_1 + c_half_2) : std::min(c_half_1, c_half_2);
}

double variance_of_constant(std::span<const double> ratios, double ratio_mean) {
  const auto m = ratios.size();
  if (m < 2) throw std::invalid_argument("variance_of_constant: need at least two ratios");
  double sum = 0.0;
  for (double r : ratios) {
    const double diff = r - ratio_mean;
    sum += diff * diff;
  }
  return sum / (static_cast<double>(m) * static_cast<double>(m - 1));
}

NormalizingEstimate estimate_from_log_ratios(std::span<const double> log_ratios) {
  const int m = static_cast<int>(log_ratios.size());
  if (m < 2 || m % 2 != 0)
    throw std::invalid_argument("estimate_from_log_ratios: m must be even and >= 2");

  // Exponentiate max-shifted values so deep-tail underflow cannot zero the
  // whole batch; rescale back at the end.
  double max_lr = -std::numeric_limits<double>::infinity();
  for (double lr : log_ratios) {
    if (std::isnan(lr) || lr == std::numeric_limits<double>::infinity())
      throw std::runtime_error("estimate_from_log_ratios: non-finite density ratio");
    max_lr = std::max(max_lr, lr);
  }
  if (max_lr == -std::numeric_limits<double>::infinity())
    throw std::runtime_error(
        "estimate_from_log_ratios: all ratios zero, the fitted ISD misses the target");

  std::vector<double> scaled(log_ratios.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = std::exp(log_ratios[i] - max_lr);

  const int half = m / 2;
  double sum1 = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < half; ++i) sum1 += scaled[static_cast<std::size_t>(i)];
  for (int i = half; i < m; ++i) sum2 += scaled[static_cast<std::size_t>(i)];
  const double rescale = std::exp(max_lr);

  NormalizingEstimate est;
  est.m_used = m;
  est.c_half_1 = rescale * (sum1 / half);
  est.c_half_2 = rescale * (sum2 / half);
  est.c_hat = combine_split_estimates(est.c_half_1, est.c_half_2, &est.min_branch);
  const double mean_scaled = (sum1 + sum2) / m;
  est.variance = rescale * rescale * variance_of_constant(scaled, mean_scaled);
  if (!std::isfinite(est.c_hat) || !std::isfinite(est.variance))
    throw std::runtime_error("estimate_from_log_ratios: estimate overflowed");
  return est;
}

NormalizingEstimate estimate_constant(const SmoothedTarget& target, const GaussianMixture& q,
                                      int m, RngStream& rng) {
  if (m < 2 || m % 2 != 0)
    throw std::invalid_argument("estimate_constant: m must be even and >= 2");
  const long long calls_before = target.limit_state().calls();
  std::vector<std::vector<double>> draws = q.sample(m, rng);
  std::vector<double> log_ratios(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto& x = draws[static_cast<std::size_t>(i)];
    log_ratios[static_cast<std::size_t>(i)] = target.log_target(x) - q.log_pdf(x);
  }
  NormalizingEstimate est = estimate_from_log_ratios(log_ratios);
  est.model_calls = target.limit_state().calls() - calls_before;
  return est;
}

}  // namespace astpa
