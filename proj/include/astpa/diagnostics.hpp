#pragma once

#include <vector>

namespace astpa {

struct EssResult {
  double ess_min = 0.0;
  int argmin_dim = 0;
  bool constant_dimension = false;  // zero-variance coordinate seen
};

/// Minimum effective sample size across dimensions. Per chain, the
/// autocorrelation time is estimated with Geyer's initial positive sequence
/// truncation; per-chain ESS values are summed, then the minimum over
/// dimensions is taken. A constant dimension contributes its full chain
/// length and raises the flag.
///
/// chains[c] holds chain c's samples as length-d points in step order.
EssResult ess_min(const std::vector<std::vector<std::vector<double>>>& chains);

/// Effective sample size of a scalar series.
double ess_scalar(const std::vector<double>& series);

/// Thinning stride floor(n / (4 ess)), clamped to {3, ..., 30}.
int thinning_stride(int n, double ess_min_value);

}  // namespace astpa
