// Command-line front end: single estimations, replication studies, table
// regeneration, reference oracles, and trace dumps for plotting.
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "astpa/benchmarks.hpp"
#include "astpa/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace astpa;
using namespace astpa::benchmarks;

namespace {

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6e", v);
  return buf;
}

/// Everything needed to reproduce a run; round-trips through JSON losslessly.
struct RunManifest {
  std::string benchmark = "bimodal_convex";
  int reps = 1;
  std::uint64_t seed = 0;
  int workers = 0;
  std::optional<double> sigma, q, p0;
  std::optional<int> n_level, n_chains, chain_length, m_iis;
  std::optional<int> gamma;
  std::optional<double> y0;
  std::optional<double> beta_r;
  std::string out = ".";

  static RunManifest from_json(const json& j) {
    static const std::vector<std::string> known = {
        "benchmark", "reps",      "seed",         "workers", "sigma", "q",
        "p0",        "n-level",   "n-chains",     "chain-length",
        "m-iis",     "gamma",     "y0",           "beta-r",  "out"};
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw std::runtime_error("manifest: unknown key '" + key + "'");
    }
    RunManifest m;
    if (j.contains("benchmark")) m.benchmark = j.at("benchmark").get<std::string>();
    if (j.contains("reps")) m.reps = j.at("reps").get<int>();
    if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) m.workers = j.at("workers").get<int>();
    if (j.contains("sigma")) m.sigma = j.at("sigma").get<double>();
    if (j.contains("q")) m.q = j.at("q").get<double>();
    if (j.contains("p0")) m.p0 = j.at("p0").get<double>();
    if (j.contains("n-level")) m.n_level = j.at("n-level").get<int>();
    if (j.contains("n-chains")) m.n_chains = j.at("n-chains").get<int>();
    if (j.contains("chain-length")) m.chain_length = j.at("chain-length").get<int>();
    if (j.contains("m-iis")) m.m_iis = j.at("m-iis").get<int>();
    if (j.contains("gamma")) m.gamma = j.at("gamma").get<int>();
    if (j.contains("y0")) m.y0 = j.at("y0").get<double>();
    if (j.contains("beta-r")) m.beta_r = j.at("beta-r").get<double>();
    if (j.contains("out")) m.out = j.at("out").get<std::string>();
    return m;
  }

  json to_json() const {
    json j;
    j["benchmark"] = benchmark;
    j["reps"] = reps;
    j["seed"] = seed;
    j["workers"] = workers;
    if (sigma) j["sigma"] = *sigma;
    if (q) j["q"] = *q;
    if (p0) j["p0"] = *p0;
    if (n_level) j["n-level"] = *n_level;
    if (n_chains) j["n-chains"] = *n_chains;
    if (chain_length) j["chain-length"] = *chain_length;
    if (m_iis) j["m-iis"] = *m_iis;
    if (gamma) j["gamma"] = *gamma;
    if (y0) j["y0"] = *y0;
    if (beta_r) j["beta-r"] = *beta_r;
    j["out"] = out;
    return j;
  }

  BenchmarkSpec resolve() const {
    BenchmarkParams params;
    if (gamma) params.gamma = *gamma;
    if (y0) params.y0 = *y0;
    if (beta_r) params.beta_r = *beta_r;
    BenchmarkSpec spec = make_benchmark(benchmark, params);
    if (sigma) spec.default_config.sigma = *sigma;
    if (q) spec.default_config.q = *q;
    if (p0) spec.default_config.discovery.p0 = *p0;
    if (n_level) spec.default_config.discovery.n_level = *n_level;
    if (n_chains) {
      spec.default_config.discovery.n_chains = *n_chains;
    }
    if (chain_length) spec.default_config.pcn.chain_length = *chain_length;
    if (m_iis) spec.default_config.m_iis = *m_iis;
    return spec;
  }
};

json estimate_to_json(const Estimate& e, int rep) {
  json j;
  j["rep"] = rep;
  j["p_hat"] = e.p_hat;
  j["p_tilde"] = e.p_tilde;
  j["c_hat"] = e.c_hat;
  j["analytical_cov"] = e.analytical_cov;
  j["n_total"] = e.n_total;
  j["n_discovery"] = e.n_discovery;
  j["n_burn"] = e.n_burn;
  j["n_samples"] = e.n_samples;
  j["m_iis"] = e.m_iis;
  j["thinning"] = e.thinning;
  j["ess_min"] = e.ess_min;
  j["n_thinned"] = e.n_thinned;
  j["mean_acceptance"] = e.mean_acceptance;
  j["discovery_levels"] = e.discovery_levels;
  j["failed"] = e.failed;
  if (e.failed) j["failure_reason"] = e.failure_reason;
  j["iis_min_branch"] = e.iis_min_branch;
  j["constant_dimension"] = e.constant_dimension;
  j["no_rare_samples"] = e.no_rare_samples;
  return j;
}

std::string aggregate_csv_header() {
  return "benchmark,d,E[N_total],CoV,E[CoV-Anal],E[p_F],failures\n";
}

std::string aggregate_csv_row(const std::string& name, int dim, const Aggregate& agg) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%s,%s,%s,%s,%d\n", name.c_str(), dim,
                sci(agg.mean_n_total).c_str(), sci(agg.sampling_cov).c_str(),
                sci(agg.mean_analytical_cov).c_str(), sci(agg.mean_p).c_str(),
                agg.failures);
  return buf;
}

int run_estimate(const RunManifest& manifest, int max_failures) {
  BenchmarkSpec spec = manifest.resolve();
  std::vector<Estimate> results = run_replications(
      spec.make_limit_state, spec.default_config, manifest.reps, manifest.seed,
      manifest.workers);
  Aggregate agg = aggregate_estimates(results);

  fs::create_directories(manifest.out);
  {
    std::ofstream jsonl(fs::path(manifest.out) / (spec.name + "_replications.jsonl"));
    for (int r = 0; r < manifest.reps; ++r)
      jsonl << estimate_to_json(results[static_cast<std::size_t>(r)], r).dump() << "\n";
  }
  const std::string row = aggregate_csv_row(spec.name, spec.dim, agg);
  {
    std::ofstream csv(fs::path(manifest.out) / (spec.name + "_aggregate.csv"));
    csv << aggregate_csv_header() << row;
  }
  std::cout << aggregate_csv_header() << row;
  if (agg.failures > max_failures) {
    std::cerr << "error: " << agg.failures << " replication(s) failed (allowed "
              << max_failures << ")\n";
    return 1;
  }
  return 0;
}

int run_tables(const std::vector<std::string>& names, int reps, std::uint64_t seed,
               int workers, const std::string& out, int gamma, double y0) {
  fs::create_directories(out);
  std::ofstream csv(fs::path(out) / "tables.csv");
  std::ofstream md(fs::path(out) / "tables.md");
  csv << aggregate_csv_header();
  md << "| benchmark | d | E[N_total] | CoV | E[CoV-Anal] | E[p_F] | reference | failures |\n"
     << "|---|---|---|---|---|---|---|---|\n";
  int status = 0;
  for (const auto& name : names) {
    BenchmarkParams params;
    params.gamma = gamma;
    params.y0 = y0;
    BenchmarkSpec spec = make_benchmark(name, params);
    std::vector<Estimate> results =
        run_replications(spec.make_limit_state, spec.default_config, reps, seed, workers);
    Aggregate agg = aggregate_estimates(results);
    csv << aggregate_csv_row(spec.name, spec.dim, agg);
    md << "| " << spec.name << " | " << spec.dim << " | " << sci(agg.mean_n_total)
       << " | " << sci(agg.sampling_cov) << " | " << sci(agg.mean_analytical_cov)
       << " | " << sci(agg.mean_p) << " | " << sci(spec.reference_probability) << " | "
       << agg.failures << " |\n";
    std::cout << aggregate_csv_row(spec.name, spec.dim, agg);
    if (agg.failures > 0) status = 1;
  }
  return status;
}

int run_oracle(const std::string& benchmark, const std::string& method, long long budget,
               std::uint64_t seed, int gamma, double y0, double beta_r) {
  BenchmarkParams params;
  params.gamma = gamma;
  params.y0 = y0;
  params.beta_r = beta_r;
  BenchmarkSpec spec = make_benchmark(benchmark, params);
  LimitState limit_state = spec.make_limit_state();

  json record;
  record["benchmark"] = spec.name;
  record["method"] = method;
  if (method == "mc") {
    if (budget <= 0) {
      std::cerr << "error: mc oracle needs a positive --budget\n";
      return 2;
    }
    McResult mc = crude_monte_carlo(limit_state, budget, seed);
    record["p"] = mc.p_hat;
    record["cov"] = mc.cov;
    record["hits"] = mc.hits;
    record["n"] = mc.n;
    record["zero_hits"] = mc.zero_hits;
  } else if (method == "quadrature") {
    if (spec.dim != 2) {
      std::cerr << "error: the quadrature oracle only covers 2-d benchmarks\n";
      return 2;
    }
    record["p"] = quadrature_reference_2d(limit_state);
    record["rel_tol"] = 0.01;
    record["evaluations"] = limit_state.calls();
  } else {
    std::cerr << "error: unknown oracle method '" << method << "'\n";
    return 2;
  }
  record["reference_probability"] = spec.reference_probability;
  record["reference_source"] = spec.reference_source;
  std::cout << record.dump(2) << "\n";
  return 0;
}

int run_trace(const RunManifest& manifest) {
  BenchmarkSpec spec = manifest.resolve();
  LimitState limit_state = spec.make_limit_state();
  const RunConfig& config = spec.default_config;

  SmoothedTarget target = config.flat_likelihood
                              ? SmoothedTarget::flat(limit_state)
                              : SmoothedTarget(limit_state, config.sigma, config.q);
  RngStream rng(manifest.seed);
  DiscoveryResult discovery = discover(limit_state, target, config.discovery, rng);

  fs::create_directories(manifest.out);
  {
    std::ofstream levels(fs::path(manifest.out) / "trace_levels.csv");
    levels << "level,lambda\n";
    for (std::size_t l = 0; l < discovery.thresholds.size(); ++l)
      levels << l + 1 << "," << sci(discovery.thresholds[l]) << "\n";
  }
  {
    std::ofstream seeds(fs::path(manifest.out) / "trace_seeds.csv");
    seeds << "seed,g";
    for (int k = 0; k < spec.dim; ++k) seeds << ",x" << k + 1;
    seeds << "\n";
    for (std::size_t s = 0; s < discovery.seeds.size(); ++s) {
      seeds << s << "," << sci(discovery.seed_g[s]);
      for (double v : discovery.seeds[s]) seeds << "," << sci(v);
      seeds << "\n";
    }
  }
  {
    std::ofstream rare(fs::path(manifest.out) / "trace_rare.csv");
    rare << "idx,g";
    for (int k = 0; k < spec.dim; ++k) rare << ",x" << k + 1;
    rare << "\n";
    for (std::size_t s = 0; s < discovery.rare_event_samples.size(); ++s) {
      rare << s << "," << sci(discovery.rare_event_g[s]);
      for (double v : discovery.rare_event_samples[s]) rare << "," << sci(v);
      rare << "\n";
    }
  }
  {
    std::ofstream chains(fs::path(manifest.out) / "trace_chains.csv");
    chains << "chain,step,g,accepted";
    for (int k = 0; k < spec.dim; ++k) chains << ",x" << k + 1;
    chains << "\n";
    for (std::size_t c = 0; c < discovery.seeds.size(); ++c) {
      ChainRun run = run_chain(discovery.seeds[c], discovery.seed_g[c], target,
                               config.pcn, rng);
      for (std::size_t t = 0; t < run.samples.size(); ++t) {
        chains << c << "," << t << "," << sci(run.g_values[t]) << ","
               << (run.accepted[t] ? 1 : 0);
        for (double v : run.samples[t]) chains << "," << sci(v);
        chains << "\n";
      }
    }
  }
  std::cout << "trace written: " << discovery.levels << " level(s), "
            << discovery.seeds.size() << " seed(s)\n";
  return 0;
}

void add_manifest_flags(CLI::App* cmd, RunManifest& m, std::string& config_path) {
  cmd->add_option("--config", config_path, "JSON manifest; flags override its keys");
  cmd->add_option("--benchmark", m.benchmark, "benchmark name");
  cmd->add_option("--reps", m.reps, "number of replications");
  cmd->add_option("--seed", m.seed, "master seed");
  cmd->add_option("--workers", m.workers, "worker threads (0 = all)");
  cmd->add_option("--sigma", [&m](const CLI::results_t& v) { m.sigma = std::stod(v[0]); return true; }, "likelihood dispersion");
  cmd->add_option("--q", [&m](const CLI::results_t& v) { m.q = std::stod(v[0]); return true; }, "scaling quotient");
  cmd->add_option("--p0", [&m](const CLI::results_t& v) { m.p0 = std::stod(v[0]); return true; }, "discovery conditional probability");
  cmd->add_option("--n-level", [&m](const CLI::results_t& v) { m.n_level = std::stoi(v[0]); return true; }, "discovery samples per level");
  cmd->add_option("--n-chains", [&m](const CLI::results_t& v) { m.n_chains = std::stoi(v[0]); return true; }, "number of chains");
  cmd->add_option("--chain-length", [&m](const CLI::results_t& v) { m.chain_length = std::stoi(v[0]); return true; }, "steps per chain");
  cmd->add_option("--m-iis", [&m](const CLI::results_t& v) { m.m_iis = std::stoi(v[0]); return true; }, "importance samples for the normalizing constant");
  cmd->add_option("--gamma", [&m](const CLI::results_t& v) { m.gamma = std::stoi(v[0]); return true; }, "decic nonlinearity order");
  cmd->add_option("--y0", [&m](const CLI::results_t& v) { m.y0 = std::stod(v[0]); return true; }, "multistory displacement threshold (m)");
  cmd->add_option("--beta-r", [&m](const CLI::results_t& v) { m.beta_r = std::stod(v[0]); return true; }, "linear benchmark reliability index");
  cmd->add_option("--out", m.out, "output directory");
}

RunManifest merge_with_config(const RunManifest& flags, const CLI::App* cmd,
                              const std::string& config_path) {
  if (config_path.empty()) return flags;
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + config_path);
  json j = json::parse(in);
  RunManifest merged = RunManifest::from_json(j);
  auto set_if = [&](const char* flag, auto member) {
    if (cmd->count(flag) > 0) merged.*member = flags.*member;
  };
  set_if("--benchmark", &RunManifest::benchmark);
  set_if("--reps", &RunManifest::reps);
  set_if("--seed", &RunManifest::seed);
  set_if("--workers", &RunManifest::workers);
  set_if("--sigma", &RunManifest::sigma);
  set_if("--q", &RunManifest::q);
  set_if("--p0", &RunManifest::p0);
  set_if("--n-level", &RunManifest::n_level);
  set_if("--n-chains", &RunManifest::n_chains);
  set_if("--chain-length", &RunManifest::chain_length);
  set_if("--m-iis", &RunManifest::m_iis);
  set_if("--gamma", &RunManifest::gamma);
  set_if("--y0", &RunManifest::y0);
  set_if("--beta-r", &RunManifest::beta_r);
  set_if("--out", &RunManifest::out);
  return merged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-free rare-event probability estimation toolkit"};
  app.require_subcommand(1);

  RunManifest est_manifest;
  std::string est_config;
  int max_failures = 0;
  CLI::App* estimate = app.add_subcommand("estimate", "run a replication study");
  add_manifest_flags(estimate, est_manifest, est_config);
  estimate->add_option("--max-failures", max_failures,
                       "tolerated failed replications before nonzero exit");

  std::vector<std::string> table_benchmarks;
  int table_reps = 500;
  std::uint64_t table_seed = 0;
  int table_workers = 0;
  int table_gamma = 10;
  double table_y0 = 0.22;
  std::string table_out = ".";
  CLI::App* tables = app.add_subcommand("tables", "regenerate the benchmark tables");
  tables->add_option("--benchmark", table_benchmarks, "subset of benchmarks (default: all)");
  tables->add_option("--reps", table_reps, "replications per benchmark");
  tables->add_option("--seed", table_seed, "master seed");
  tables->add_option("--workers", table_workers, "worker threads (0 = all)");
  tables->add_option("--gamma", table_gamma, "decic nonlinearity order");
  tables->add_option("--y0", table_y0, "multistory threshold (m)");
  tables->add_option("--out", table_out, "output directory");

  std::string oracle_benchmark, oracle_method = "mc";
  long long oracle_budget = 0;
  std::uint64_t oracle_seed = 0;
  int oracle_gamma = 10;
  double oracle_y0 = 0.22, oracle_beta_r = 4.0;
  CLI::App* oracle = app.add_subcommand("oracle", "independent reference probability");
  oracle->add_option("--benchmark", oracle_benchmark, "benchmark name")->required();
  oracle->add_option("--method", oracle_method, "mc or quadrature");
  oracle->add_option("--budget", oracle_budget, "Monte Carlo sample count");
  oracle->add_option("--seed", oracle_seed, "Monte Carlo seed");
  oracle->add_option("--gamma", oracle_gamma, "decic nonlinearity order");
  oracle->add_option("--y0", oracle_y0, "multistory threshold (m)");
  oracle->add_option("--beta-r", oracle_beta_r, "linear benchmark reliability index");

  RunManifest trace_manifest;
  std::string trace_config;
  CLI::App* trace = app.add_subcommand("trace", "dump discovery/chain traces as CSV");
  add_manifest_flags(trace, trace_manifest, trace_config);

  CLI11_PARSE(app, argc, argv);

  try {
    if (estimate->parsed())
      return run_estimate(merge_with_config(est_manifest, estimate, est_config), max_failures);
    if (tables->parsed()) {
      std::vector<std::string> names = table_benchmarks;
      if (names.empty())
        names = {"bimodal_convex", "quartic_bimodal", "himmelblau",
                 "changing_topology", "multistory", "decic"};
      return run_tables(names, table_reps, table_seed, table_workers, table_out,
                        table_gamma, table_y0);
    }
    if (oracle->parsed())
      return run_oracle(oracle_benchmark, oracle_method, oracle_budget, oracle_seed,
                        oracle_gamma, oracle_y0, oracle_beta_r);
    if (trace->parsed())
      return run_trace(merge_with_config(trace_manifest, trace, trace_config));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
