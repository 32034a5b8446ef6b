#pragma once

#include <span>
#include <string>
#include <vector>

#include "astpa/rng.hpp"
#include "json.hpp"

namespace astpa {

enum class CovarianceType { Full, Diagonal };

/// Immutable Gaussian mixture; component factorizations are cached at
/// construction so log_pdf is cheap and thread-safe.
class GaussianMixture {
 public:
  /// weights on the simplex; covariances row-major d*d (Full) or length d
  /// (Diagonal).
  GaussianMixture(std::vector<double> weights, std::vector<std::vector<double>> means,
                  std::vector<std::vector<double>> covariances, CovarianceType cov_type);

  /// EM fit with k-means++ initialization from the stream, covariance floor
  /// 1e-6, convergence at relative log-likelihood change < 1e-6 or 500
  /// iterations. Deterministic given the stream. restarts > 1 keeps the fit
  /// with the best final likelihood.
  static GaussianMixture fit(const std::vector<std::vector<double>>& samples, int k,
                             CovarianceType cov_type, RngStream& rng, int restarts = 3,
                             std::vector<double>* ll_trace = nullptr);

  /// Fits k in {1, ..., k_max} and keeps the lowest Bayesian information
  /// criterion.
  static GaussianMixture fit_bic(const std::vector<std::vector<double>>& samples, int k_max,
                                 CovarianceType cov_type, RngStream& rng);

  double log_pdf(std::span<const double> x) const;
  std::vector<std::vector<double>> sample(int m, RngStream& rng) const;

  int dim() const { return dim_; }
  int components() const { return k_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::vector<double>>& means() const { return means_; }
  const std::vector<std::vector<double>>& covariances() const { return covariances_; }
  CovarianceType covariance_type() const { return cov_type_; }

  /// Mean data log-likelihood, for convergence checks and BIC.
  double mean_log_likelihood(const std::vector<std::vector<double>>& samples) const;

  double component_log_pdf(int component, std::span<const double> x) const;

  nlohmann::json to_json() const;

 private:
  std::vector<double> component_sample(int component, RngStream& rng) const;

  int dim_ = 0;
  int k_ = 0;
  CovarianceType cov_type_ = CovarianceType::Full;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> covariances_;
  std::vector<std::vector<double>> chol_;      // lower factors (Full) or sqrt diag (Diagonal)
  std::vector<double> log_norm_;               // -d/2 log(2 pi) - 1/2 log|Sigma|
};

/// Lower-triangular Cholesky factor of a row-major SPD matrix.
std::vector<double> cholesky_lower(std::span<const double> matrix, int dim);

}  // namespace astpa
