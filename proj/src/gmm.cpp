#include "astpa/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace astpa {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kCovarianceFloor = 1e-6;
constexpr double kEmRelTol = 1e-6;
constexpr int kEmMaxIter = 500;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

}  // namespace

std::vector<double> cholesky_lower(std::span<const double> matrix, int dim) {
  std::vector<double> lower(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = matrix[static_cast<std::size_t>(i) * dim + j];
      for (int k = 0; k < j; ++k)
        sum -= lower[static_cast<std::size_t>(i) * dim + k] *
               lower[static_cast<std::size_t>(j) * dim + k];
      if (i == j) {
        if (sum <= 0.0) throw std::runtime_error("cholesky_lower: matrix not positive definite");
        lower[static_cast<std::size_t>(i) * dim + j] = std::sqrt(sum);
      } else {
        lower[static_cast<std::size_t>(i) * dim + j] =
            sum / lower[static_cast<std::size_t>(j) * dim + j];
      }
    }
  }
  return lower;
}

GaussianMixture::GaussianMixture(std::vector<double> weights,
                                 std::vector<std::vector<double>> means,
                                 std::vector<std::vector<double>> covariances,
                                 CovarianceType cov_type)
    : cov_type_(cov_type),
      weights_(std::move(weights)),
      means_(std::move(means)),
      covariances_(std::move(covariances)) {
  k_ = static_cast<int>(weights_.size());
  if (k_ < 1 || means_.size() != weights_.size() || covariances_.size() != weights_.size())
    throw std::invalid_argument("GaussianMixture: inconsistent component counts");
  dim_ = static_cast<int>(means_.front().size());

  double weight_sum = 0.0;
  for (double w : weights_) {
    if (w < 0.0) throw std::invalid_argument("GaussianMixture: negative weight");
    weight_sum += w;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12)
    throw std::invalid_argument("GaussianMixture: weights must sum to 1");

  log_weights_.resize(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i)
    log_weights_[i] = weights_[i] > 0.0 ? std::log(weights_[i])
                                        : -std::numeric_limits<double>::infinity();

  chol_.resize(covariances_.size());
  log_norm_.resize(covariances_.size());
  for (std::size_t c = 0; c < covariances_.size(); ++c) {
    if (cov_type_ == CovarianceType::Full) {
      if (covariances_[c].size() != static_cast<std::size_t>(dim_) * dim_)
        throw std::invalid_argument("GaussianMixture: bad full covariance size");
      chol_[c] = cholesky_lower(covariances_[c], dim_);
      double log_det = 0.0;
      for (int i = 0; i < dim_; ++i)
        log_det += 2.0 * std::log(chol_[c][static_cast<std::size_t>(i) * dim_ + i]);
      log_norm_[c] = -0.5 * dim_ * kLog2Pi - 0.5 * log_det;
    } else {
      if (covariances_[c].size() != static_cast<std::size_t>(dim_))
        throw std::invalid_argument("GaussianMixture: bad diagonal covariance size");
      double log_det = 0.0;
      chol_[c].resize(static_cast<std::size_t>(dim_));
      for (int i = 0; i < dim_; ++i) {
        const double v = covariances_[c][static_cast<std::size_t>(i)];
        if (v <= 0.0) throw std::invalid_argument("GaussianMixture: non-positive variance");
        chol_[c][static_cast<std::size_t>(i)] = std::sqrt(v);
        log_det += std::log(v);
      }
      log_norm_[c] = -0.5 * dim_ * kLog2Pi - 0.5 * log_det;
    }
  }
}

double GaussianMixture::component_log_pdf(int component, std::span<const double> x) const {
  const auto c = static_cast<std::size_t>(component);
  const auto& mean = means_[c];
  if (cov_type_ == CovarianceType::Full) {
    // Forward-substitute L y = x - mu; quadratic form is |y|^2.
    std::vector<double> y(static_cast<std::size_t>(dim_));
    const auto& lower = chol_[c];
    for (int i = 0; i < dim_; ++i) {
      double sum = x[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
      for (int j = 0; j < i; ++j)
        sum -= lower[static_cast<std::size_t>(i) * dim_ + j] * y[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = sum / lower[static_cast<std::size_t>(i) * dim_ + i];
    }
    double quad = 0.0;
    for (double yi : y) quad += yi * yi;
    return log_norm_[c] - 0.5 * quad;
  }
  double quad = 0.0;
  for (int i = 0; i < dim_; ++i) {
    const double z = (x[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)]) /
                     chol_[c][static_cast<std::size_t>(i)];
    quad += z * z;
  }
  return log_norm_[c] - 0.5 * quad;
}

double GaussianMixture::log_pdf(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("GaussianMixture::log_pdf: dimension mismatch");
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(static_cast<std::size_t>(k_));
  for (int c = 0; c < k_; ++c) {
    terms[static_cast<std::size_t>(c)] = log_weights_[static_cast<std::size_t>(c)] +
                                         component_log_pdf(c, x);
    max_term = std::max(max_term, terms[static_cast<std::size_t>(c)]);
  }
  if (!std::isfinite(max_term)) return max_term;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return max_term + std::log(sum);
}

std::vector<double> GaussianMixture::component_sample(int component, RngStream& rng) const {
  const auto c = static_cast<std::size_t>(component);
  std::vector<double> z = rng.normal_vector(dim_);
  std::vector<double> x(static_cast<std::size_t>(dim_));
  if (cov_type_ == CovarianceType::Full) {
    const auto& lower = chol_[c];
    for (int i = 0; i < dim_; ++i) {
      double sum = means_[c][static_cast<std::size_t>(i)];
      for (int j = 0; j <= i; ++j)
        sum += lower[static_cast<std::size_t>(i) * dim_ + j] * z[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(i)] = sum;
    }
  } else {
    for (int i = 0; i < dim_; ++i)
      x[static_cast<std::size_t>(i)] = means_[c][static_cast<std::size_t>(i)] +
                                       chol_[c][static_cast<std::size_t>(i)] *
                                           z[static_cast<std::size_t>(i)];
  }
  return x;
}

std::vector<std::vector<double>> GaussianMixture::sample(int m, RngStream& rng) const {
  if (m < 1) throw std::invalid_argument("GaussianMixture::sample: m must be >= 1");
  std::vector<double> cumulative(weights_.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < weights_.size(); ++c) {
    acc += weights_[c];
    cumulative[c] = acc;
  }
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double u = rng.uniform() * acc;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const int c = static_cast<int>(std::min<std::ptrdiff_t>(
        it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    out.push_back(component_sample(c, rng));
  }
  return out;
}

double GaussianMixture::mean_log_likelihood(const std::vector<std::vector<double>>& samples) const {
  double total = 0.0;
  for (const auto& x : samples) total += log_pdf(x);
  return total / static_cast<double>(samples.size());
}

namespace {

struct EmFit {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> covs;
  double mean_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> ll_trace;
};

std::vector<std::vector<double>> kmeanspp_means(const std::vector<std::vector<double>>& samples,
                                                int k, RngStream& rng) {
  const int n = static_cast<int>(samples.size());
  std::vector<std::vector<double>> means;
  means.push_back(samples[static_cast<std::size_t>(rng.uniform_int(n))]);
  std::vector<double> dist2(static_cast<std::size_t>(n),
                            std::numeric_limits<double>::infinity());
  while (static_cast<int>(means.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      dist2[si] = std::min(dist2[si], squared_distance(samples[si], means.back()));
      total += dist2[si];
    }
    if (total <= 0.0) {
      // All remaining points coincide with a chosen mean; pick uniformly.
      means.push_back(samples[static_cast<std::size_t>(rng.uniform_int(n))]);
      continue;
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      acc += dist2[static_cast<std::size_t>(i)];
      if (u <= acc) {
        chosen = i;
        break;
      }
    }
    means.push_back(samples[static_cast<std::size_t>(chosen)]);
  }
  return means;
}

EmFit run_em(const std::vector<std::vector<double>>& samples, int k, CovarianceType cov_type,
             RngStream& rng) {
  const int n = static_cast<int>(samples.size());
  const int d = static_cast<int>(samples.front().size());

  EmFit fit;
  fit.weights.assign(static_cast<std::size_t>(k), 1.0 / k);
  fit.means = kmeanspp_means(samples, k, rng);

  // Shared initial covariance: the global biased sample covariance (+floor).
  std::vector<double> global_mean(static_cast<std::size_t>(d), 0.0);
  for (const auto& x : samples)
    for (int i = 0; i < d; ++i) global_mean[static_cast<std::size_t>(i)] += x[static_cast<std::size_t>(i)];
  for (double& m : global_mean) m /= n;
  std::vector<double> init_cov;
  if (cov_type == CovarianceType::Full) {
    init_cov.assign(static_cast<std::size_t>(d) * d, 0.0);
    for (const auto& x : samples)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          init_cov[static_cast<std::size_t>(i) * d + j] +=
              (x[static_cast<std::size_t>(i)] - global_mean[static_cast<std::size_t>(i)]) *
              (x[static_cast<std::size_t>(j)] - global_mean[static_cast<std::size_t>(j)]);
    for (double& v : init_cov) v /= n;
    for (int i = 0; i < d; ++i) init_cov[static_cast<std::size_t>(i) * d + i] += kCovarianceFloor;
  } else {
    init_cov.assign(static_cast<std::size_t>(d), 0.0);
    for (const auto& x : samples)
      for (int i = 0; i < d; ++i) {
        const double diff = x[static_cast<std::size_t>(i)] - global_mean[static_cast<std::size_t>(i)];
        init_cov[static_cast<std::size_t>(i)] += diff * diff;
      }
    for (double& v : init_cov) v = v / n + kCovarianceFloor;
  }
  fit.covs.assign(static_cast<std::size_t>(k), init_cov);

  std::vector<double> resp(static_cast<std::size_t>(n) * k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> prev_weights = fit.weights;
  std::vector<std::vector<double>> prev_means = fit.means;
  std::vector<std::vector<double>> prev_covs = fit.covs;
  for (int iter = 0; iter < kEmMaxIter; ++iter) {
    GaussianMixture model(fit.weights, fit.means, fit.covs, cov_type);

    // E-step: per-sample responsibilities; independent across samples.
    std::vector<double> sample_ll(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      double max_term = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double t = std::log(fit.weights[static_cast<std::size_t>(c)]) +
                         model.component_log_pdf(c, samples[si]);
        resp[si * k + static_cast<std::size_t>(c)] = t;
        max_term = std::max(max_term, t);
      }
      double sum = 0.0;
      for (int c = 0; c < k; ++c)
        sum += std::exp(resp[si * k + static_cast<std::size_t>(c)] - max_term);
      sample_ll[si] = max_term + std::log(sum);
      for (int c = 0; c < k; ++c)
        resp[si * k + static_cast<std::size_t>(c)] =
            std::exp(resp[si * k + static_cast<std::size_t>(c)] - sample_ll[si]);
    }
    double ll = 0.0;
    for (double v : sample_ll) ll += v;
    ll /= n;
    if (ll + 1e-12 * std::abs(ll) + 1e-12 < prev_ll) {
      // The variance floor applied after each M-step is a projection, so the
      // exact ascent guarantee can break by a floor-sized amount; treat any
      // decrease as convergence and keep the previous (better) parameters.
      fit.weights = std::move(prev_weights);
      fit.means = std::move(prev_means);
      fit.covs = std::move(prev_covs);
      break;
    }
    fit.ll_trace.push_back(ll);
    prev_weights = fit.weights;
    prev_means = fit.means;
    prev_covs = fit.covs;

    // M-step.
    for (int c = 0; c < k; ++c) {
      const auto sc = static_cast<std::size_t>(c);
      double nk = 0.0;
      std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
      for (int i = 0; i < n; ++i) {
        const double r = resp[static_cast<std::size_t>(i) * k + sc];
        nk += r;
        for (int j = 0; j < d; ++j)
          mean[static_cast<std::size_t>(j)] +=
              r * samples[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
      nk = std::max(nk, 1e-300);
      for (double& m : mean) m /= nk;
      fit.weights[sc] = nk / n;
      fit.means[sc] = mean;
      if (cov_type == CovarianceType::Full) {
        std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
        for (int i = 0; i < n; ++i) {
          const double r = resp[static_cast<std::size_t>(i) * k + sc];
          const auto& x = samples[static_cast<std::size_t>(i)];
          for (int a = 0; a < d; ++a)
            for (int b = 0; b <= a; ++b)
              cov[static_cast<std::size_t>(a) * d + b] +=
                  r * (x[static_cast<std::size_t>(a)] - mean[static_cast<std::size_t>(a)]) *
                  (x[static_cast<std::size_t>(b)] - mean[static_cast<std::size_t>(b)]);
        }
        for (int a = 0; a < d; ++a)
          for (int b = 0; b <= a; ++b) {
            cov[static_cast<std::size_t>(a) * d + b] /= nk;
            cov[static_cast<std::size_t>(b) * d + a] = cov[static_cast<std::size_t>(a) * d + b];
          }
        for (int a = 0; a < d; ++a)
          cov[static_cast<std::size_t>(a) * d + a] += kCovarianceFloor;
        fit.covs[sc] = std::move(cov);
      } else {
        std::vector<double> cov(static_cast<std::size_t>(d), 0.0);
        for (int i = 0; i < n; ++i) {
          const double r = resp[static_cast<std::size_t>(i) * k + sc];
          const auto& x = samples[static_cast<std::size_t>(i)];
          for (int a = 0; a < d; ++a) {
            const double diff = x[static_cast<std::size_t>(a)] - mean[static_cast<std::size_t>(a)];
            cov[static_cast<std::size_t>(a)] += r * diff * diff;
          }
        }
        for (double& v : cov) v = v / nk + kCovarianceFloor;
        fit.covs[sc] = std::move(cov);
      }
    }

    // Renormalize weights against accumulated rounding.
    double wsum = 0.0;
    for (double w : fit.weights) wsum += w;
    for (double& w : fit.weights) w /= wsum;

    if (iter > 0 && std::abs(ll - prev_ll) < kEmRelTol * std::abs(prev_ll)) {
      prev_ll = ll;
      break;
    }
    prev_ll = ll;
  }
  fit.mean_ll = prev_ll;
  return fit;
}

}  // namespace

GaussianMixture GaussianMixture::fit(const std::vector<std::vector<double>>& samples, int k,
                                     CovarianceType cov_type, RngStream& rng, int restarts,
                                     std::vector<double>* ll_trace) {
  if (k < 1) throw std::invalid_argument("GaussianMixture::fit: k must be >= 1");
  if (static_cast<int>(samples.size()) <= k)
    throw std::invalid_argument("GaussianMixture::fit: need more samples than components");
  const auto& first = samples.front();
  bool all_identical = true;
  for (const auto& x : samples)
    if (x != first) {
      all_identical = false;
      break;
    }
  if (all_identical)
    throw std::invalid_argument("GaussianMixture::fit: degenerate input, all samples identical");

  EmFit best;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    EmFit candidate = run_em(samples, k, cov_type, rng);
    if (candidate.mean_ll > best.mean_ll) best = std::move(candidate);
  }
  if (ll_trace) *ll_trace = best.ll_trace;
  return GaussianMixture(std::move(best.weights), std::move(best.means), std::move(best.covs),
                         cov_type);
}

GaussianMixture GaussianMixture::fit_bic(const std::vector<std::vector<double>>& samples,
                                         int k_max, CovarianceType cov_type, RngStream& rng) {
  const auto n = static_cast<double>(samples.size());
  const int d = static_cast<int>(samples.front().size());
  double best_bic = std::numeric_limits<double>::infinity();
  GaussianMixture* best = nullptr;
  std::vector<GaussianMixture> fits;
  fits.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    if (static_cast<int>(samples.size()) <= k) break;
    fits.push_back(fit(samples, k, cov_type, rng));
    const double params =
        (k - 1) + k * d +
        (cov_type == CovarianceType::Full ? k * d * (d + 1) / 2.0 : k * d);
    const double bic = -2.0 * n * fits.back().mean_log_likelihood(samples) +
                       params * std::log(n);
    if (bic < best_bic) {
      best_bic = bic;
      best = &fits.back();
    }
  }
  if (!best) throw std::invalid_argument("GaussianMixture::fit_bic: no feasible k");
  return *best;
}

nlohmann::json GaussianMixture::to_json() const {
  nlohmann::json j;
  j["covariance_type"] = cov_type_ == CovarianceType::Full ? "full" : "diagonal";
  j["dim"] = dim_;
  j["weights"] = weights_;
  j["means"] = means_;
  j["covariances"] = covariances_;
  return j;
}

}  // namespace astpa
