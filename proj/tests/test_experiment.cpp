#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "phoenixsim/experiment.hpp"

using namespace phoenixsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("phoenixsim_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kMiniSwf =
    "; synthetic mini trace\n"
    "1 0 -1 600 8\n"
    "2 100 -1 300 4\n";

nlohmann::json base_config() {
  return nlohmann::json{
      {"regime", "dcs"},
      {"horizon_s", 4000},
      {"tuple", {{"prc_pbj", 8}, {"prc_ws", 5}}},
      {"batch_trace", {{"path", "mini.swf"}}},
      {"ws_trace",
       {{"synth",
         {{"duration_s", 4000},
          {"base_nodes", 2},
          {"peak_nodes", 5},
          {"burst_windows", nlohmann::json::array({nlohmann::json::array({1000, 2000})})},
          {"seed", 1}}}}},
  };
}

}  // namespace

TEST_CASE("experiment config parses and resolves relative paths") {
  TempDir dir;
  write_file(dir.path / "mini.swf", kMiniSwf);
  write_file(dir.path / "cfg.json", base_config().dump(2));

  ExperimentConfig cfg = load_experiment_config(dir.path / "cfg.json");
  CHECK(cfg.regime == RegimeKind::dcs);
  CHECK(cfg.horizon_s == 4000);
  CHECK(cfg.prc_pbj == 8);
  CHECK(cfg.batch.path == dir.path / "mini.swf");
  REQUIRE(cfg.ws.synth.has_value());
  CHECK(cfg.ws.synth->peak_nodes == 5);
}

TEST_CASE("experiment config rejects unknown keys with a field message") {
  auto doc = base_config();
  doc["tupel"] = 1;  // typo
  CHECK_THROWS_WITH_AS(experiment_config_from_json(doc, "."),
                       doctest::Contains("tupel"), ConfigError);

  auto doc2 = base_config();
  doc2["ws_trace"]["path"] = "x.csv";  // second source next to synth
  CHECK_THROWS_AS(experiment_config_from_json(doc2, "."), ConfigError);

  auto doc3 = base_config();
  doc3["policy"] = {{"B", 5}, {"B_ratio", 0.1}};
  CHECK_THROWS_AS(experiment_config_from_json(doc3, "."), ConfigError);
}

TEST_CASE("run_experiment writes a parseable single-run report") {
  TempDir dir;
  write_file(dir.path / "mini.swf", kMiniSwf);
  write_file(dir.path / "cfg.json", base_config().dump());

  ExperimentConfig cfg = load_experiment_config(dir.path / "cfg.json");
  auto outcome = run_experiment(cfg, dir.path / "out", true);
  REQUIRE(outcome.rows.size() == 1);
  CHECK(outcome.rows[0].report.mgmt_overhead_adjustments == 0);
  CHECK(outcome.rows[0].report.config_size_nodes == 13);

  auto rows = load_report_csv(outcome.report_csv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].regime == "dcs");
  CHECK(rows[0].completed_jobs == 2);
  CHECK(rows[0].horizon_s == 4000);
  CHECK(rows[0].total_resource_node_hours ==
        doctest::Approx(13.0 * 4000 / 3600.0).epsilon(1e-3));
}

TEST_CASE("a sweep expands to the sorted cross product") {
  TempDir dir;
  write_file(dir.path / "mini.swf", kMiniSwf);
  auto doc = base_config();
  doc["regime"] = "phoenix_fb";
  doc["sweep"] = {{"cluster_size", {13, 10}}, {"L_s", {1800, 900}}};
  write_file(dir.path / "cfg.json", doc.dump());

  ExperimentConfig cfg = load_experiment_config(dir.path / "cfg.json");
  auto outcome = run_experiment(cfg, dir.path / "out", true);
  REQUIRE(outcome.rows.size() == 4);
  CHECK(outcome.rows[0].run_id == "phoenix_fb_C10_L900");
  CHECK(outcome.rows[1].run_id == "phoenix_fb_C10_L1800");
  CHECK(outcome.rows[2].run_id == "phoenix_fb_C13_L900");
  CHECK(outcome.rows[3].run_id == "phoenix_fb_C13_L1800");
  for (const auto& row : outcome.rows) CHECK(row.report.completed_jobs == 2);
}

TEST_CASE("sweep axes are rejected for regimes that lack them") {
  auto doc = base_config();
  doc["sweep"] = {{"B", {5, 10}}};
  TempDir dir;
  write_file(dir.path / "mini.swf", kMiniSwf);
  write_file(dir.path / "cfg.json", doc.dump());
  ExperimentConfig cfg = load_experiment_config(dir.path / "cfg.json");
  CHECK_THROWS_AS(run_experiment(cfg, dir.path / "out", false), ConfigError);
}

TEST_CASE("repeated experiments are byte-identical") {
  TempDir dir;
  write_file(dir.path / "mini.swf", kMiniSwf);
  auto doc = base_config();
  doc["regime"] = "phoenix_fb";
  doc["cluster_size"] = 11;
  doc["output"] = {{"alloc_series", true}, {"job_records", true}};
  write_file(dir.path / "cfg.json", doc.dump());

  ExperimentConfig cfg = load_experiment_config(dir.path / "cfg.json");
  auto a = run_experiment(cfg, dir.path / "out_a", true);
  auto b = run_experiment(cfg, dir.path / "out_b", true);
  CHECK(read_file(a.report_csv) == read_file(b.report_csv));
  CHECK(read_file(dir.path / "out_a" / "alloc_phoenix_fb_C11_L3600.csv") ==
        read_file(dir.path / "out_b" / "alloc_phoenix_fb_C11_L3600.csv"));
  CHECK(read_file(dir.path / "out_a" / "jobs_phoenix_fb_C11_L3600.csv") ==
        read_file(dir.path / "out_b" / "jobs_phoenix_fb_C11_L3600.csv"));
}

TEST_CASE("compare reproduces the published savings arithmetic") {
  TempDir dir;

  auto make_row = [](const char* id, RegimeKind regime, int64_t completed,
                     double turnaround, int64_t peak, double total) {
    ReportRow row;
    row.run_id = id;
    row.params.regime = regime;
    row.params.prc_pbj = 128;
    row.params.prc_ws = 128;
    row.params.policy.lease_unit_s = 3600;
    row.report.completed_jobs = completed;
    row.report.avg_turnaround_s = turnaround;
    row.report.avg_execution_s = 573;
    row.report.peak_resource_nodes = peak;
    row.report.total_resource_node_hours = total;
    row.report.horizon_s = 1209600;  // two weeks
    return row;
  };

  // the published comparison point: EC2 baseline vs the coordinated policy
  ReportRow ec2 = make_row("ec2", RegimeKind::ec2_rightscale, 2603, 573, 1319, 63336);
  ReportRow phx = make_row("phoenix", RegimeKind::phoenix_flbnub, 2603, 826, 412, 45803);

  write_file(dir.path / "ec2.csv", report_csv_header() + "\n" + report_csv_row(ec2) + "\n");
  write_file(dir.path / "phx.csv", report_csv_header() + "\n" + report_csv_row(phx) + "\n");

  compare_reports(dir.path / "ec2.csv", {dir.path / "phx.csv"},
                  dir.path / "cmp.csv");
  std::string cmp = read_file(dir.path / "cmp.csv");

  // phoenix vs ec2: 27.7% total savings, peak ratio 0.312, turnaround +44.2%,
  // 46.8% saved against the full static capacity
  CHECK(cmp.find("27.7") != std::string::npos);
  CHECK(cmp.find("0.312") != std::string::npos);
  CHECK(cmp.find("44.2") != std::string::npos);
  CHECK(cmp.find("46.8") != std::string::npos);

  // the baseline row compared to itself is all zeros
  std::istringstream lines(cmp);
  std::string header, base_line;
  std::getline(lines, header);
  std::getline(lines, base_line);
  CHECK(base_line.find("ec2,ec2_rightscale,2603,0,573,0,0.0,1319,1.000,") !=
        std::string::npos);
}

TEST_CASE("compare rejects mismatched horizons") {
  TempDir dir;
  ReportRow a;
  a.run_id = "a";
  a.params.prc_pbj = a.params.prc_ws = 8;
  a.report.horizon_s = 1000;
  ReportRow b = a;
  b.run_id = "b";
  b.report.horizon_s = 2000;
  write_file(dir.path / "a.csv", report_csv_header() + "\n" + report_csv_row(a) + "\n");
  write_file(dir.path / "b.csv", report_csv_header() + "\n" + report_csv_row(b) + "\n");
  CHECK_THROWS_AS(
      compare_reports(dir.path / "a.csv", {dir.path / "b.csv"}, dir.path / "c.csv"),
      ConfigError);
}
