#include "astpa/limit_state.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

namespace astpa {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void warn_sigma(double sigma) {
  // [0.1, 0.6] is a recommendation, not a hard bound.
  if (sigma < 0.1 || sigma > 0.6)
    std::fprintf(stderr, "astpa: warning: sigma=%g outside the recommended range [0.1, 0.6]\n",
                 sigma);
}

double softplus(double z) {
  // log(1 + e^z) without overflow on either side.
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

}  // namespace

LimitState::LimitState(std::function<double(std::span<const double>)> fn, int dim)
    : fn_(std::move(fn)),
      dim_(dim),
      counter_(std::make_shared<std::atomic<long long>>(0)) {
  if (dim_ < 1) throw std::invalid_argument("LimitState: dim must be positive");
  if (!fn_) throw std::invalid_argument("LimitState: empty function");
}

double LimitState::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("LimitState: dimension mismatch");
  counter_->fetch_add(1, std::memory_order_relaxed);
  return fn_(x);
}

GaussianPrior::GaussianPrior(int dim, double scale) : dim_(dim), scale_(scale) {
  if (dim_ < 1) throw std::invalid_argument("GaussianPrior: dim must be positive");
  if (!(scale_ > 0.0)) throw std::invalid_argument("GaussianPrior: scale must be positive");
}

double GaussianPrior::log_pdf(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("GaussianPrior: dimension mismatch");
  double sq = 0.0;
  for (double xi : x) sq += xi * xi;
  return -0.5 * dim_ * (kLog2Pi + std::log(scale_)) - 0.5 * sq / scale_;
}

std::vector<double> GaussianPrior::sample(RngStream& rng) const {
  std::vector<double> x(static_cast<std::size_t>(dim_));
  const double sd = std::sqrt(scale_);
  for (double& xi : x) xi = sd * rng.normal();
  return x;
}

double scaling_constant(double g_at_origin, double q) {
  if (!std::isfinite(g_at_origin))
    throw std::invalid_argument("scaling_constant: g(0) is not finite");
  if (g_at_origin <= 0.0)
    throw std::invalid_argument(
        "scaling_constant: g(0) <= 0, the origin already lies in the rare event domain");
  if (g_at_origin >= 3.0 && g_at_origin <= 7.0) return 1.0;
  if (!(q >= 3.0 && q <= 7.0))
    throw std::invalid_argument("scaling_constant: q must lie in [3, 7]");
  return g_at_origin / q;
}

SmoothedTarget::SmoothedTarget(LimitState limit_state, double sigma, double g_c, bool flat)
    : limit_state_(std::move(limit_state)),
      prior_(limit_state_.dim(), 1.0),
      sigma_(sigma),
      mu_g_(1.21 * sigma),
      g_c_(g_c),
      flat_(flat) {}

SmoothedTarget::SmoothedTarget(LimitState limit_state, double sigma, double q)
    : SmoothedTarget(std::move(limit_state), sigma, 1.0, false) {
  if (!(sigma > 0.0)) throw std::invalid_argument("SmoothedTarget: sigma must be positive");
  warn_sigma(sigma);
  std::vector<double> origin(static_cast<std::size_t>(limit_state_.dim()), 0.0);
  g_at_origin_ = limit_state_(origin);  // counted toward the budget
  g_c_ = scaling_constant(g_at_origin_, q);
}

SmoothedTarget SmoothedTarget::with_scale(LimitState limit_state, double sigma, double g_c) {
  if (!(sigma > 0.0)) throw std::invalid_argument("SmoothedTarget: sigma must be positive");
  if (!(g_c > 0.0)) throw std::invalid_argument("SmoothedTarget: g_c must be positive");
  warn_sigma(sigma);
  return SmoothedTarget(std::move(limit_state), sigma, g_c, false);
}

SmoothedTarget SmoothedTarget::flat(LimitState limit_state) {
  return SmoothedTarget(std::move(limit_state), 1.0, 1.0, true);
}

double SmoothedTarget::log_likelihood(double g_value) const {
  if (flat_) return 0.0;
  const double s = (std::numbers::sqrt3 / std::numbers::pi) * sigma_;
  const double z = (g_value / g_c_ + mu_g_) / s;
  return -softplus(z);
}

double SmoothedTarget::log_target(std::span<const double> x) const {
  const double g = limit_state_(x);
  return log_likelihood(g) + prior_.log_pdf(x);
}

double SmoothedTarget::log_target_given_g(std::span<const double> x, double g_value) const {
  return log_likelihood(g_value) + prior_.log_pdf(x);
}

}  // namespace astpa
