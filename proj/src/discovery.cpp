#include "astpa/discovery.hpp"

#include "astpa/pcn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace astpa {

namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double xi : x) s += xi * xi;
  return s;
}

int rounded_seed_count(const DiscoveryConfig& c) {
  const int n_s = static_cast<int>(std::lround(c.p0 * c.n_level));
  if (n_s < 1) throw std::invalid_argument("discover: p0 * n_level must round to >= 1");
  return n_s;
}

}  // namespace

double intermediate_threshold(std::vector<double> g_values, double p0) {
  if (g_values.empty()) throw std::invalid_argument("intermediate_threshold: empty list");
  std::sort(g_values.begin(), g_values.end());
  const auto n = static_cast<double>(g_values.size());
  const auto rank = static_cast<std::size_t>(std::ceil(p0 * n));  // 1-based
  return g_values[std::max<std::size_t>(rank, 1) - 1];
}

double reciprocal_accept_factor(double norm2_current, double norm2_proposed) {
  if (norm2_proposed >= norm2_current) return 1.0;
  return std::exp(norm2_proposed - norm2_current);
}

ReciprocalStepResult reciprocal_conditional_step(std::span<const double> current,
                                                 double current_g, double lambda_j,
                                                 double beta, const LimitState& limit_state,
                                                 const GaussianPrior& unit_prior,
                                                 RngStream& rng) {
  if (!(current_g <= lambda_j))
    throw std::invalid_argument("reciprocal_conditional_step: current point outside F_j");

  std::vector<double> proposal(current.size());
  const double keep = std::sqrt(1.0 - beta * beta);
  for (std::size_t i = 0; i < proposal.size(); ++i)
    proposal[i] = keep * current[i] + beta * rng.normal();

  const double factor = reciprocal_accept_factor(norm2(current), norm2(proposal));
  const double u = rng.uniform();

  ReciprocalStepResult out;
  if (u >= factor) {
    // Rejected on the prior ratio alone; g is never evaluated.
    out.point.assign(current.begin(), current.end());
    out.g = current_g;
    out.alpha = factor;
    out.accepted = false;
    return out;
  }
  const double g_prop = limit_state(proposal);
  if (g_prop <= lambda_j) {
    out.point = std::move(proposal);
    out.g = g_prop;
    out.alpha = factor;
    out.accepted = true;
  } else {
    out.point.assign(current.begin(), current.end());
    out.g = current_g;
    out.alpha = 0.0;
    out.accepted = false;
  }
  (void)unit_prior;
  return out;
}

std::vector<int> select_weighted_indices(std::span<const double> log_weights, int n,
                                         RngStream& rng) {
  if (n > static_cast<int>(log_weights.size()))
    throw std::invalid_argument("select_weighted_indices: fewer items than picks");
  const std::size_t count = log_weights.size();
  // Normalized weights in log space.
  double max_lw = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) max_lw = std::max(max_lw, lw);
  std::vector<double> w(count);
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    w[i] = std::exp(log_weights[i] - max_lw);
    total += w[i];
  }
  for (double& wi : w) wi /= total;

  // Draw n distinct indices so that each item's probability of being selected
  // is proportional to its weight, capped at certainty: pi_i = min(1, n' w_i /
  // remaining mass), iterating the cap, then one systematic pass over the
  // uncapped remainder. Heavy items cannot absorb more than one slot, so the
  // remaining slots spread across the light tail of the pool.
  std::vector<double> pi(count, 0.0);
  std::vector<char> capped(count, 0);
  int remaining = n;
  double mass = 1.0;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < count; ++i) {
      if (!capped[i] && mass > 0.0 && static_cast<double>(remaining) * w[i] / mass >= 1.0) {
        capped[i] = 1;
        pi[i] = 1.0;
        --remaining;
        mass -= w[i];
        changed = true;
      }
    }
  }
  for (std::size_t i = 0; i < count; ++i)
    if (!capped[i]) pi[i] = mass > 0.0 ? static_cast<double>(remaining) * w[i] / mass : 0.0;

  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < count; ++i)
    if (capped[i]) picked.push_back(static_cast<int>(i));
  if (remaining > 0) {
    // Systematic pass over a random permutation: the shuffle makes the
    // inclusion vector exchangeable (equal weights reduce to uniform
    // subset sampling) while keeping each marginal exactly pi_i.
    std::vector<int> order;
    order.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      if (!capped[i]) order.push_back(static_cast<int>(i));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
    const double u = rng.uniform();
    double cumulative = 0.0;
    int taken = 0;
    for (int idx : order) {
      cumulative += pi[static_cast<std::size_t>(idx)];
      while (u + taken < cumulative && taken < remaining) {
        picked.push_back(idx);
        ++taken;
      }
      if (taken >= remaining) break;
    }
    // Guard against floating-point shortfall at the far end of the pass.
    for (std::size_t i = order.size(); picked.size() < static_cast<std::size_t>(n) && i-- > 0;) {
      if (std::find(picked.begin(), picked.end(), order[i]) == picked.end())
        picked.push_back(order[i]);
    }
  }
  return picked;
}

std::vector<int> select_seed_indices(const std::vector<std::vector<double>>& rare_samples,
                                     std::span<const double> rare_g,
                                     const SmoothedTarget& target, int n_chains,
                                     SeedMode mode, RngStream& rng) {
  const int n = static_cast<int>(rare_samples.size());
  if (n < n_chains)
    throw std::runtime_error("select_seed_indices: fewer rare-event samples than chains");
  if (mode == SeedMode::Uniform) {
    std::vector<int> active(static_cast<std::size_t>(n));
    std::iota(active.begin(), active.end(), 0);
    std::vector<int> picked;
    for (int pick = 0; pick < n_chains; ++pick) {
      const int pos = rng.uniform_int(static_cast<int>(active.size()));
      picked.push_back(active[static_cast<std::size_t>(pos)]);
      active.erase(active.begin() + pos);
    }
    return picked;
  }
  std::vector<double> log_w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    log_w[static_cast<std::size_t>(i)] =
        target.log_target_given_g(rare_samples[static_cast<std::size_t>(i)],
                                  rare_g[static_cast<std::size_t>(i)]);
  return select_weighted_indices(log_w, n_chains, rng);
}

DiscoveryResult discover(const LimitState& limit_state, const SmoothedTarget& target,
                         const DiscoveryConfig& config, RngStream& rng) {
  if (config.n_level < 1) throw std::invalid_argument("discover: n_level must be positive");
  if (!(config.p0 > 0.0 && config.p0 < 1.0))
    throw std::invalid_argument("discover: p0 must lie in (0, 1)");
  if (!(config.epsilon >= 1.0)) throw std::invalid_argument("discover: epsilon must be >= 1");
  if (config.n_chains < 1) throw std::invalid_argument("discover: n_chains must be positive");

  rounded_seed_count(config);  // validates p0 * n_level >= 1
  const long long calls_before = limit_state.calls();

  const GaussianPrior initial_prior(limit_state.dim(), config.epsilon);
  const GaussianPrior unit_prior(limit_state.dim(), 1.0);

  std::vector<std::vector<double>> points;
  std::vector<double> g_values;
  points.reserve(static_cast<std::size_t>(config.n_level));
  g_values.reserve(static_cast<std::size_t>(config.n_level));
  for (int i = 0; i < config.n_level; ++i) {
    points.push_back(initial_prior.sample(rng));
    g_values.push_back(limit_state(points.back()));
  }

  DiscoveryResult result;
  // Rare-event samples are accumulated across every level, initial set
  // included: early levels often hold samples in modes that later elite
  // selection abandons, and keeping them lets the seed-selection step place
  // chains in all discovered modes. Rejected steps repeat their predecessor;
  // those exact copies are dropped here so the selected seeds stay pairwise
  // distinct and no single point absorbs several weighted picks.
  std::set<std::vector<double>> seen;
  auto collect_rare = [&](const std::vector<double>& x, double g) {
    if (g <= 0.0 && seen.insert(x).second) {
      result.rare_event_samples.push_back(x);
      result.rare_event_g.push_back(g);
    }
  };
  for (std::size_t i = 0; i < points.size(); ++i) collect_rare(points[i], g_values[i]);

  double lambda = intermediate_threshold(g_values, config.p0);
  result.thresholds.push_back(std::max(lambda, 0.0));

  double beta = 0.5;
  int adapt_t = 1;
  constexpr double kReciprocalAlphaStar = 0.3;

  while (lambda > 0.0 && result.levels < config.max_levels) {
    const double level_threshold = lambda;
    // Seeds are the points defining the p0 quantile: every distinct state with
    // g <= lambda. Rejected MCMC steps repeat their predecessor, so the
    // quantile entries can hold many copies of one state; seeding each state
    // once (with the growth budget spread evenly) keeps every surviving
    // lineage represented instead of letting one deep chain's copies crowd
    // the level.
    std::map<std::vector<double>, double> eligible;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (g_values[i] <= lambda) eligible.emplace(points[i], g_values[i]);
    const int n_d = static_cast<int>(eligible.size());

    std::vector<std::vector<double>> next_points;
    std::vector<double> next_g;
    next_points.reserve(static_cast<std::size_t>(config.n_level));
    next_g.reserve(static_cast<std::size_t>(config.n_level));
    int seed_index = 0;
    for (auto& [seed_point, seed_g] : eligible) {
      std::vector<double> x = seed_point;
      double g = seed_g;
      next_points.push_back(x);
      next_g.push_back(g);
      const int budget = (config.n_level - n_d) / n_d +
                         ((config.n_level - n_d) % n_d > seed_index ? 1 : 0);
      ++seed_index;
      for (int step = 0; step < budget; ++step) {
        ReciprocalStepResult r = reciprocal_conditional_step(x, g, level_threshold, beta,
                                                             limit_state, unit_prior, rng);
        beta = adapt_beta(beta, r.alpha, kReciprocalAlphaStar, adapt_t++);
        x = std::move(r.point);
        g = r.g;
        next_points.push_back(x);
        next_g.push_back(g);
        collect_rare(x, g);
      }
    }

    points = std::move(next_points);
    g_values = std::move(next_g);
    ++result.levels;

    const double next_lambda = intermediate_threshold(g_values, config.p0);
    if (next_lambda > lambda)
      throw std::logic_error("discover: thresholds must be non-increasing");
    lambda = next_lambda;
    result.thresholds.push_back(std::max(lambda, 0.0));
  }
  if (lambda > 0.0)
    throw std::runtime_error("discover: max_levels exceeded without reaching g <= 0");

  if (static_cast<int>(result.rare_event_samples.size()) < config.n_chains)
    throw std::runtime_error(
        "discover: fewer rare-event samples than requested chains; increase n_level");

  const std::vector<int> picked =
      select_seed_indices(result.rare_event_samples, result.rare_event_g, target,
                          config.n_chains, config.seed_mode, rng);
  for (int idx : picked) {
    result.seeds.push_back(result.rare_event_samples[static_cast<std::size_t>(idx)]);
    result.seed_g.push_back(result.rare_event_g[static_cast<std::size_t>(idx)]);
  }
  result.model_calls = limit_state.calls() - calls_before;
  return result;
}

}  // namespace astpa
