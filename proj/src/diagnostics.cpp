#include "astpa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace astpa {

double ess_scalar(const std::vector<double>& series) {
  const int n = static_cast<int>(series.size());
  if (n < 2) throw std::invalid_argument("ess_scalar: need at least two samples");

  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : series) var += (x - mean) * (x - mean);
  var /= n;
  if (var <= 0.0) return static_cast<double>(n);  // constant series, handled by caller

  auto autocov = [&](int lag) {
    double s = 0.0;
    for (int t = 0; t + lag < n; ++t)
      s += (series[static_cast<std::size_t>(t)] - mean) *
           (series[static_cast<std::size_t>(t + lag)] - mean);
    return s / n;
  };

  // Geyer initial positive sequence: sum paired autocovariances while the
  // pair sums stay positive.
  double tau = 1.0;  // rho_0
  for (int m = 0; 2 * m + 2 < n; ++m) {
    const double pair = autocov(2 * m + 1) + autocov(2 * m + 2);
    if (pair <= 0.0) break;
    tau += 2.0 * pair / var;
  }
  return static_cast<double>(n) / std::max(tau, 1.0);
}

EssResult ess_min(const std::vector<std::vector<std::vector<double>>>& chains) {
  if (chains.empty() || chains.front().empty())
    throw std::invalid_argument("ess_min: no chains");
  const int d = static_cast<int>(chains.front().front().size());

  EssResult result;
  std::vector<double> per_dim(static_cast<std::size_t>(d), 0.0);
  std::vector<char> constant(static_cast<std::size_t>(d), 0);

#pragma omp parallel for schedule(dynamic)
  for (int dim = 0; dim < d; ++dim) {
    double total = 0.0;
    bool any_constant = false;
    for (const auto& chain : chains) {
      if (chain.size() < 2) throw std::invalid_argument("ess_min: chain too short");
      std::vector<double> series;
      series.reserve(chain.size());
      for (const auto& x : chain) series.push_back(x[static_cast<std::size_t>(dim)]);
      const double first = series.front();
      const bool is_constant =
          std::all_of(series.begin(), series.end(), [&](double v) { return v == first; });
      if (is_constant) {
        any_constant = true;
        total += static_cast<double>(series.size());
      } else {
        total += ess_scalar(series);
      }
    }
    per_dim[static_cast<std::size_t>(dim)] = total;
    constant[static_cast<std::size_t>(dim)] = any_constant ? 1 : 0;
  }

  result.ess_min = per_dim[0];
  result.argmin_dim = 0;
  for (int dim = 1; dim < d; ++dim)
    if (per_dim[static_cast<std::size_t>(dim)] < result.ess_min) {
      result.ess_min = per_dim[static_cast<std::size_t>(dim)];
      result.argmin_dim = dim;
    }
  for (char c : constant)
    if (c) result.constant_dimension = true;
  return result;
}

int thinning_stride(int n, double ess_min_value) {
  if (n < 1) throw std::invalid_argument("thinning_stride: n must be >= 1");
  if (!(ess_min_value > 0.0))
    throw std::invalid_argument("thinning_stride: ess must be positive");
  const int j = static_cast<int>(std::floor(n / (4.0 * ess_min_value)));
  return std::clamp(j, 3, 30);
}

}  // namespace astpa
