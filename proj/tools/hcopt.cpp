#include <iostream>

#include "CLI11.hpp"
#include "hcopt/harness/experiment.hpp"

namespace {

enum Exit { kOk = 0, kConfigError = 2, kRuntimeError = 3 };

int guarded(const std::string& path, const std::function<int(const hcopt::harness::ExperimentConfig&)>& body) {
  hcopt::harness::ExperimentConfig ex;
  try {
    ex = hcopt::harness::load_experiment_file(path);
  } catch (const hcopt::harness::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kConfigError;
  } catch (const hcopt::Error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kConfigError;
  }
  try {
    return body(ex);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hcopt::harness;
  CLI::App app{"Stochastic optimization with hidden convexity: experiment runner"};
  app.require_subcommand(1);
  std::string path;
  std::string out_root;
  app.add_option("--output-root", out_root, "Overrides HCOPT_OUTPUT_ROOT");

  auto* run_cmd = app.add_subcommand("run", "Run every configured method and write traces and a summary");
  run_cmd->add_option("config", path, "Experiment config file")->required();
  auto* cmp_cmd = app.add_subcommand("compare", "Evaluate booking-limit policies on common scenarios");
  cmp_cmd->add_option("config", path, "Experiment config file")->required();
  auto* orc_cmd = app.add_subcommand("oracle", "Run the verification suite for a config");
  orc_cmd->add_option("config", path, "Experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }
  std::optional<fs::path> root;
  if (!out_root.empty()) root = out_root;

  if (*run_cmd) {
    return guarded(path, [&](const ExperimentConfig& ex) {
      const ExperimentResult res = run_experiment(ex, root);
      for (const auto& r : res.runs) {
        std::cout << r.label << (ex.repeat > 1 ? " r" + std::to_string(r.replicate) : "") << ": ";
        if (r.ok)
          std::cout << format_double(r.final_value) << " +- " << format_double(r.final_stderr) << "\n";
        else
          std::cout << r.status << "\n";
      }
      std::cout << "wrote " << res.files.size() << " files to " << res.directory.string() << "\n";
      return res.all_ok() ? kOk : kRuntimeError;
    });
  }
  if (*cmp_cmd) {
    return guarded(path, [&](const ExperimentConfig& ex) {
      const ComparisonResult res = compare_policies(ex, root);
      for (const auto& p : res.policies)
        std::cout << p.name << ": " << format_double(p.mean) << " +- " << format_double(p.std_error) << "  limits ["
                  << join_vector(p.limits) << "]\n";
      std::cout << "wrote comparison.csv and pairwise.csv to " << res.directory.string() << "\n";
      return kOk;
    });
  }
  return guarded(path, [&](const ExperimentConfig& ex) {
    const OracleReport rep = run_oracle_suite(ex, root);
    std::size_t failed = 0;
    for (const auto& c : rep.checks) {
      if (!c.pass) ++failed;
      if (!c.pass) std::cout << "FAIL " << c.check << " " << c.subject << ": " << format_double(c.value) << " vs "
                             << format_double(c.reference) << " (tol " << format_double(c.tolerance) << ")\n";
    }
    std::cout << rep.checks.size() - failed << "/" << rep.checks.size() << " oracle checks passed\n";
    return failed == 0 ? kOk : kRuntimeError;
  });
}
