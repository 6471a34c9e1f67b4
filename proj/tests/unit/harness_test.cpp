#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "hcopt/harness/experiment.hpp"

using namespace hcopt;
using namespace hcopt::harness;

namespace {

const std::string kConfigDir = std::string(HCOPT_SOURCE_DIR) + "/configs/";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hcopt_harness_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> data_lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

ExperimentConfig small_synthetic(const std::string& extra = "") {
  const std::string text = R"([experiment]
name = small
kind = synthetic
seed = 40
threads = 4
)" + extra + R"(
[problem]
dim = 1
upper = 0.9
phi = trunc_min
xi = uniform(0, 1)
outer = quadratic
target = 0.3
outer_lipschitz = 1.2

[method.RSG]
iters = 500
eval_every = 100
eval_samples = 500

[method.MSG]
iters = 300
step = inverse_sqrt(0.1)
eval_every = 100
eval_samples = 500

[evaluation]
samples = 2000
)";
  return load_experiment(Config::parse_string(text, "small"));
}

const std::string kTinyNrm = R"([experiment]
name = cmp
kind = nrm
seed = 5

[instance]
type = explicit
consumption = 1 1
revenue = 5 1
penalty = 4 2
demand = poisson(5); poisson(6)
capacity_mean = 6
capacity_cv = 0.2
show_up = all
x_upper = 12

[evaluation]
samples = 400
seed = 8

[compare]
policies = dlp; dlp; zero; enumerated; limits(3 3)
enumerate_max = 9
)";

}  // namespace

TEST(RunExperiment, OneDimensionalWritesThreeTracesAndSummary) {
  const fs::path root = scratch("one_dim");
  const ExperimentConfig ex = load_experiment_file(kConfigDir + "one_dim.ini");
  const ExperimentResult r = run_experiment(ex, root);
  EXPECT_TRUE(r.all_ok());
  const fs::path dir = root / "one_dim";
  for (const char* f : {"trace_RSG.csv", "trace_MSG.csv", "trace_SAA_SG.csv", "summary.csv", "resolved_config.ini"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::size_t traces = 0;
  for (const auto& e : fs::directory_iterator(dir)) traces += e.path().filename().string().rfind("trace_", 0) == 0;
  EXPECT_EQ(traces, 3u);
  const auto rows = data_lines(dir / "summary.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].rfind("method,final_revenue_or_objective,stderr,iters,samples,seconds", 0), 0u);
  EXPECT_EQ(data_lines(dir / "trace_RSG.csv")[0], "iter,samples_consumed,mc_objective,mc_stderr,wall_ms");
  // every output embeds the config hash
  for (const char* f : {"trace_RSG.csv", "summary.csv", "resolved_config.ini"})
    EXPECT_EQ(slurp(dir / f).rfind("# config_hash=" + ex.config_hash + " seed=", 0), 0u) << f;
  for (const auto& run : r.runs) EXPECT_LE(run.final_value - 0.009, 1e-3) << run.label;
}

TEST(RunExperiment, RepeatGivesOneRowPerReplicate) {
  const fs::path root = scratch("repeat");
  const ExperimentConfig ex = small_synthetic("repeat = 5\n");
  const ExperimentResult r = run_experiment(ex, root);
  const auto rows = data_lines(root / "small" / "summary.csv");
  std::map<std::string, std::vector<std::string>> seeds;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> cols = split(rows[i], ',');
    seeds[cols[0]].push_back(cols[6]);
  }
  ASSERT_EQ(seeds.size(), 2u);
  for (const auto& [method, s] : seeds) EXPECT_EQ(s, (std::vector<std::string>{"40", "41", "42", "43", "44"})) << method;
  EXPECT_TRUE(fs::exists(root / "small" / "trace_MSG_r4.csv"));
}

TEST(RunExperiment, RerunIsByteIdentical) {
  const ExperimentConfig ex = small_synthetic();
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const ExperimentResult ra = run_experiment(ex, a);
  run_experiment(ex, b);
  for (const auto& f : ra.files) EXPECT_EQ(slurp(a / "small" / f), slurp(b / "small" / f)) << f;
  EXPECT_GE(ra.files.size(), 4u);
}

TEST(RunExperiment, FailingMethodOnlyAffectsItsRow) {
  // a point-mass law at 0 leaves SAA+SG with a zero-width image box
  const std::string text = R"([experiment]
name = fails
kind = synthetic
seed = 1

[problem]
dim = 1
upper = 1
phi = trunc_min
xi = point(0)
outer = quadratic
target = 0.3

[method.RSG]
iters = 50

[method.SAA_SG]
iters = 50
n = 10
)";
  const fs::path root = scratch("fails");
  const ExperimentResult r = run_experiment(load_experiment(Config::parse_string(text)), root);
  EXPECT_FALSE(r.all_ok());
  EXPECT_TRUE(r.runs[0].ok);
  EXPECT_FALSE(r.runs[1].ok);
  const auto rows = data_lines(root / "fails" / "summary.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[1].find(",ok,"), std::string::npos);
  EXPECT_NE(rows[2].find("error:"), std::string::npos);
  EXPECT_TRUE(fs::exists(root / "fails" / "trace_RSG.csv"));
  EXPECT_FALSE(fs::exists(root / "fails" / "trace_SAA_SG.csv"));
}

TEST(RunExperiment, OutputRootFromEnvironment) {
  const fs::path root = scratch("env");
  ::setenv("HCOPT_OUTPUT_ROOT", root.c_str(), 1);
  EXPECT_EQ(output_root(), root);
  run_experiment(small_synthetic());
  ::unsetenv("HCOPT_OUTPUT_ROOT");
  EXPECT_TRUE(fs::exists(root / "small" / "summary.csv"));
  EXPECT_EQ(output_root(), fs::path("results"));
}

TEST(RunExperiment, CsvQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
}

TEST(ComparePolicies, IdenticalZeroAndEnumeratedPolicies) {
  const ExperimentConfig ex = load_experiment(Config::parse_string(kTinyNrm, "cmp"));
  const fs::path root = scratch("compare");
  const ComparisonResult r = compare_policies(ex, root);
  ASSERT_EQ(r.policies.size(), 5u);
  auto pair = [&](std::size_t a, std::size_t b) -> const nrm::PairedComparison& {
    for (const auto& p : r.pairs)
      if (p.a == r.policies[a].name && p.b == r.policies[b].name) return p.cmp;
    throw std::runtime_error("pair not found");
  };
  // the same policy twice
  const auto& same = r.pairs[0];
  EXPECT_EQ(same.a, "dlp");
  EXPECT_EQ(same.b, "dlp");
  EXPECT_EQ(same.cmp.relative_improvement, 0.0);
  EXPECT_FALSE(same.cmp.significant);
  // accepting nothing loses to DLP
  const auto& dz = pair(0, 2);
  EXPECT_GT(dz.mean_difference, 0.0);
  EXPECT_TRUE(dz.significant);
  for (double v : r.policies[2].revenues) EXPECT_EQ(v, 0.0);
  // exhaustive search dominates on the shared scenarios
  for (const auto& p : r.policies) EXPECT_GE(r.policies[3].mean + 1e-9, p.mean) << p.name;
  EXPECT_EQ(r.policies[4].limits, (Vector{3, 3}));
  const auto rows = data_lines(root / "cmp" / "pairwise.csv");
  EXPECT_EQ(rows.size(), 1u + 5u * 4u);
  EXPECT_EQ(data_lines(root / "cmp" / "comparison.csv").size(), 6u);
}

TEST(ComparePolicies, UnknownPolicyIsAnError) {
  std::string text = kTinyNrm;
  text.replace(text.find("policies = "), std::string("policies = dlp; dlp; zero; enumerated; limits(3 3)").size(),
               "policies = dlp; nope");
  EXPECT_THROW(compare_policies(load_experiment(Config::parse_string(text)), scratch("bad")), ArgumentError);
}

TEST(OracleSuite, OneDimensionalChecksPass) {
  const ExperimentConfig ex = load_experiment_file(kConfigDir + "one_dim.ini");
  const fs::path root = scratch("oracle");
  const OracleReport rep = run_oracle_suite(ex, root);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.check << " " << c.subject << " " << c.value << " vs " << c.reference;
  std::set<std::string> kinds;
  for (const auto& c : rep.checks) kinds.insert(c.check);
  EXPECT_EQ(kinds, (std::set<std::string>{"g_closed_form", "gradient_plain_vs_fd", "grid_dominance"}));
  EXPECT_TRUE(fs::exists(root / "one_dim" / "oracle.csv"));
}

TEST(OracleSuite, SmallNrmChecksPass) {
  std::string text = kTinyNrm + "\n[oracle]\nfd_step = 0.25\nfd_samples = 3000\ngrad_samples = 3000\nlp_checks = 50\npoints = 3\n";
  const OracleReport rep = run_oracle_suite(load_experiment(Config::parse_string(text)), scratch("nrm_oracle"));
  std::set<std::string> kinds;
  for (const auto& c : rep.checks) {
    EXPECT_TRUE(c.pass) << c.check << " " << c.subject;
    kinds.insert(c.check);
  }
  EXPECT_EQ(kinds, (std::set<std::string>{"lp_certificate", "gradient_nrm_exact_vs_fd", "enumeration_dominance"}));
}

TEST(RunParallel, KeepsJobOrder) {
  std::vector<int> out(100, -1);
  run_parallel(100, 8, [&](std::size_t j) { out[j] = static_cast<int>(j * j); });
  for (int j = 0; j < 100; ++j) EXPECT_EQ(out[j], j * j);
}
