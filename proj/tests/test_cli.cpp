// End-to-end command-line interface checks: artifacts, determinism,
// manifests, oracles, traces, and exit statuses.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = ASTPA_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("astpa_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kSmallLinear =
    "--benchmark linear --beta-r 3 --reps 2 --seed 11 --n-level 200 --chain-length 80 "
    "--m-iis 60";

}  // namespace

TEST_CASE("estimate writes per-replication JSON lines and an aggregate row") {
  const fs::path out = fresh_dir("estimate");
  REQUIRE(run("estimate " + kSmallLinear + " --out " + out.string()) == 0);
  const std::string jsonl = slurp(out / "linear_replications.jsonl");
  std::istringstream lines(jsonl);
  std::string line;
  std::vector<json> records;
  while (std::getline(lines, line))
    if (!line.empty()) records.push_back(json::parse(line));
  REQUIRE(records.size() == 2);
  for (const auto& rec : records) {
    CHECK(rec.contains("p_hat"));
    CHECK(rec.contains("n_total"));
    CHECK(rec.contains("failed"));
  }
  const std::string csv = slurp(out / "linear_aggregate.csv");
  CHECK(csv.find("benchmark,d,E[N_total],CoV,E[CoV-Anal],E[p_F],failures") != std::string::npos);
  CHECK(csv.find("linear,2,") != std::string::npos);
}

TEST_CASE("aggregate CSV is recomputable from the JSON lines") {
  const fs::path out = fresh_dir("reduce");
  REQUIRE(run("estimate --benchmark bimodal_convex --reps 4 --seed 3 --n-level 200 "
              "--chain-length 100 --m-iis 100 --out " + out.string()) == 0);
  std::istringstream lines(slurp(out / "bimodal_convex_replications.jsonl"));
  std::string line;
  double sum_p = 0.0;
  int ok = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    if (!rec.at("failed").get<bool>()) {
      sum_p += rec.at("p_hat").get<double>();
      ++ok;
    }
  }
  REQUIRE(ok > 0);
  const std::string csv = slurp(out / "bimodal_convex_aggregate.csv");
  const std::size_t header_end = csv.find('\n');
  std::istringstream row(csv.substr(header_end + 1));
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(row, field, ',')) fields.push_back(field);
  REQUIRE(fields.size() == 7);
  CHECK(std::stod(fields[5]) == doctest::Approx(sum_p / ok).epsilon(1e-5));
}

TEST_CASE("the same manifest and seed produce byte-identical outputs") {
  const fs::path out_a = fresh_dir("det_a");
  const fs::path out_b = fresh_dir("det_b");
  REQUIRE(run("estimate " + kSmallLinear + " --out " + out_a.string()) == 0);
  REQUIRE(run("estimate " + kSmallLinear + " --out " + out_b.string()) == 0);
  CHECK(slurp(out_a / "linear_replications.jsonl") == slurp(out_b / "linear_replications.jsonl"));
  CHECK(slurp(out_a / "linear_aggregate.csv") == slurp(out_b / "linear_aggregate.csv"));
}

TEST_CASE("JSON manifest drives the run and flags override its keys") {
  const fs::path dir = fresh_dir("manifest");
  const fs::path manifest = dir / "run.json";
  {
    json j;
    j["benchmark"] = "linear";
    j["beta-r"] = 3;
    j["reps"] = 2;
    j["seed"] = 11;
    j["n-level"] = 200;
    j["chain-length"] = 80;
    j["m-iis"] = 60;
    j["out"] = (dir / "from_config").string();
    std::ofstream(manifest) << j.dump(2);
  }
  REQUIRE(run("estimate --config " + manifest.string()) == 0);
  const fs::path flag_out = fresh_dir("manifest_flags");
  REQUIRE(run("estimate " + kSmallLinear + " --out " + flag_out.string()) == 0);
  CHECK(slurp(dir / "from_config" / "linear_replications.jsonl") ==
        slurp(flag_out / "linear_replications.jsonl"));
  // A flag overrides the manifest key: different seed, different output.
  const fs::path override_out = fresh_dir("manifest_override");
  REQUIRE(run("estimate --config " + manifest.string() + " --seed 12 --out " +
              override_out.string()) == 0);
  CHECK(slurp(override_out / "linear_replications.jsonl") !=
        slurp(flag_out / "linear_replications.jsonl"));
}

TEST_CASE("unknown manifest keys are rejected") {
  const fs::path dir = fresh_dir("manifest_bad");
  const fs::path manifest = dir / "bad.json";
  std::ofstream(manifest) << R"({"benchmark": "linear", "bogus": 1})";
  CHECK(run("estimate --config " + manifest.string()) != 0);
}

TEST_CASE("exit status reflects replication failures and the tolerance flag") {
  const fs::path out = fresh_dir("failures");
  // p0 * n_level < 1 makes every replication fail its discovery stage.
  const std::string broken =
      "estimate --benchmark bimodal_convex --reps 2 --seed 1 --p0 0.001 --n-level 100 --out " +
      out.string();
  CHECK(run(broken) != 0);
  CHECK(run(broken + " --max-failures 2") == 0);
  CHECK(run("estimate --benchmark no_such_benchmark --reps 1 --out " + out.string()) != 0);
}

TEST_CASE("oracle subcommand") {
  const fs::path dir = fresh_dir("oracle");
  const std::string record_path = (dir / "mc.json").string();
  const std::string cmd = kCli + " oracle --benchmark linear --method mc --beta-r 0 "
                                 "--budget 100000 --seed 2 > " + record_path + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  const json record = json::parse(slurp(record_path));
  CHECK(record.at("method") == "mc");
  CHECK(std::abs(record.at("p").get<double>() - 0.5) < 0.01);
  CHECK(record.at("reference_probability").get<double>() == doctest::Approx(0.5));
  // Usage errors: missing budget, high-dimensional quadrature, unknown method.
  CHECK(run("oracle --benchmark linear --method mc") != 0);
  CHECK(run("oracle --benchmark multistory --method quadrature") != 0);
  CHECK(run("oracle --benchmark linear --method nonsense") != 0);
}

TEST_CASE("quadrature oracle reproduces a tabulated reference") {
  const fs::path dir = fresh_dir("oracle_quad");
  const std::string record_path = (dir / "quad.json").string();
  const std::string cmd = kCli + " oracle --benchmark himmelblau --method quadrature > " +
                          record_path + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  const json record = json::parse(slurp(record_path));
  CHECK(record.at("p").get<double>() == doctest::Approx(2.81e-7).epsilon(0.10));
}

TEST_CASE("trace subcommand dumps reproducible discovery artifacts") {
  const fs::path out_a = fresh_dir("trace_a");
  const fs::path out_b = fresh_dir("trace_b");
  const std::string args = "trace --benchmark bimodal_convex --seed 6 --out ";
  REQUIRE(run(args + out_a.string()) == 0);
  REQUIRE(run(args + out_b.string()) == 0);
  for (const char* name : {"trace_levels.csv", "trace_seeds.csv", "trace_rare.csv",
                           "trace_chains.csv"}) {
    CHECK(fs::exists(out_a / name));
    CHECK(slurp(out_a / name) == slurp(out_b / name));
  }
  // Every traced seed lies in the failure domain.
  std::istringstream seeds(slurp(out_a / "trace_seeds.csv"));
  std::string line;
  std::getline(seeds, line);  // header
  int count = 0;
  while (std::getline(seeds, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    const std::size_t second = line.find(',', comma + 1);
    CHECK(std::stod(line.substr(comma + 1, second - comma - 1)) <= 0.0);
    ++count;
  }
  CHECK(count == 10);  // the benchmark's default chain count
}

TEST_CASE("tables subcommand writes the CSV and Markdown summaries") {
  const fs::path out = fresh_dir("tables");
  REQUIRE(run("tables --benchmark bimodal_convex --reps 3 --seed 5 --out " + out.string()) == 0);
  const std::string csv = slurp(out / "tables.csv");
  CHECK(csv.find("bimodal_convex,2,") != std::string::npos);
  const std::string md = slurp(out / "tables.md");
  CHECK(md.find("| bimodal_convex | 2 |") != std::string::npos);
  CHECK(md.find("9.47") != std::string::npos);  // reference column present
}
