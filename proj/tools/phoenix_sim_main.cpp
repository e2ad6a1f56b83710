#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "phoenixsim/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"phoenix-sim: coordinated resource provisioning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  bool assert_invariants = false;
  int verbosity = 0;
  CLI::App* run = app.add_subcommand("run", "execute one experiment document");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--assert-invariants", assert_invariants,
                "check ledger conservation after every event");
  run->add_flag("-v,--verbose", verbosity, "print one summary line per run");

  std::string baseline_csv;
  std::vector<std::string> other_csvs;
  std::string compare_out = "compare.csv";
  CLI::App* compare = app.add_subcommand("compare", "diff report CSVs against a baseline");
  compare->add_option("--baseline", baseline_csv, "baseline report.csv")->required();
  compare->add_option("reports", other_csvs, "report CSVs to compare")->expected(-1);
  compare->add_option("--out", compare_out, "comparison CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto cfg = phoenixsim::load_experiment_config(config_path);
      auto outcome =
          phoenixsim::run_experiment(cfg, out_dir, assert_invariants, verbosity);
      std::cout << "wrote " << outcome.report_csv.string() << " ("
                << outcome.rows.size() << " runs)\n";
    } else {
      std::vector<std::filesystem::path> others(other_csvs.begin(), other_csvs.end());
      phoenixsim::compare_reports(baseline_csv, others, compare_out);
      std::cout << "wrote " << compare_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
