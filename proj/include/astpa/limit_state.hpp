#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "astpa/rng.hpp"

namespace astpa {

/// A deterministic performance function g : R^d -> R together with the model
/// call counter that drives all budget accounting. Copies share the counter,
/// which is the only mutable state and is safe to bump from concurrent chains.
class LimitState {
 public:
  LimitState(std::function<double(std::span<const double>)> fn, int dim);

  /// Evaluates g(x), incrementing the shared call counter by exactly one.
  double operator()(std::span<const double> x) const;

  int dim() const { return dim_; }
  long long calls() const { return counter_->load(std::memory_order_relaxed); }
  void reset_calls() const { counter_->store(0, std::memory_order_relaxed); }

 private:
  std::function<double(std::span<const double>)> fn_;
  int dim_;
  std::shared_ptr<std::atomic<long long>> counter_;
};

/// Zero-mean Gaussian reference density with covariance scale * I.
/// scale == 1 during estimation; scale >= 1 during discovery.
class GaussianPrior {
 public:
  explicit GaussianPrior(int dim, double scale = 1.0);

  double log_pdf(std::span<const double> x) const;
  std::vector<double> sample(RngStream& rng) const;

  int dim() const { return dim_; }
  double scale() const { return scale_; }

 private:
  int dim_;
  double scale_;
};

/// Scaling rule for the likelihood input: g(0)/q when g(0) falls outside
/// [3, 7], identity otherwise. Throws when g(0) is non-finite or <= 0 (the
/// origin would already be a failure point).
double scaling_constant(double g_at_origin, double q);

/// The unnormalized sampling target h(x) = l(g(x)) * pi(x), where l is a
/// logistic CDF of the negatively scaled limit state. All likelihood
/// arithmetic is done in log space via softplus so deep tails never overflow.
class SmoothedTarget {
 public:
  /// Evaluates g at the origin once (counted) and applies the scaling rule.
  SmoothedTarget(LimitState limit_state, double sigma, double q = 4.0);

  /// Bypasses the scaling rule with an explicit g_c (no origin evaluation).
  static SmoothedTarget with_scale(LimitState limit_state, double sigma, double g_c);

  /// Degenerate target with l == 1, i.e. h == pi. Used for sampler checks.
  static SmoothedTarget flat(LimitState limit_state);

  /// log l(g); pure, no model call.
  double log_likelihood(double g_value) const;

  /// log h(x) = log l(g(x)) + log pi(x); exactly one model call.
  double log_target(std::span<const double> x) const;

  /// log h(x) from an already known g(x); no model call.
  double log_target_given_g(std::span<const double> x, double g_value) const;

  double sigma() const { return sigma_; }
  double mu_g() const { return mu_g_; }
  double g_c() const { return g_c_; }
  double g_at_origin() const { return g_at_origin_; }
  bool flat_likelihood() const { return flat_; }
  const GaussianPrior& prior() const { return prior_; }
  const LimitState& limit_state() const { return limit_state_; }

 private:
  SmoothedTarget(LimitState limit_state, double sigma, double g_c, bool flat);

  LimitState limit_state_;
  GaussianPrior prior_;
  double sigma_ = 0.0;
  double mu_g_ = 0.0;  // always 1.21 * sigma
  double g_c_ = 1.0;
  double g_at_origin_ = 0.0;
  bool flat_ = false;
};

}  // namespace astpa
