#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "phoenixsim/provision.hpp"
#include "phoenixsim/traces.hpp"

namespace phoenixsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Trace sources as named in the experiment document.
struct BatchTraceSpec {
  std::filesystem::path path;
  SwfColumnMap columns;
  std::optional<std::pair<int64_t, int64_t>> segment;  // (start_s, length_s)
  int64_t cpus_per_node = 1;
};

struct WsSynthSpec {
  int64_t duration_s = 0;
  int64_t base_nodes = 1;
  int64_t peak_nodes = 1;
  std::vector<std::pair<int64_t, int64_t>> burst_windows;
  uint64_t seed = 0;
};

struct WsAutoscaleSpec {
  std::filesystem::path rates_path;
  AutoscalerParams params;
  int64_t sample_period_s = 1;
};

struct WsTraceSpec {
  // exactly one of these is set
  std::optional<std::filesystem::path> path;
  std::optional<WsSynthSpec> synth;
  std::optional<WsAutoscaleSpec> autoscale;
};

/// One experiment document: a single run, or a sweep producing the cross
/// product of the listed axis values.
struct ExperimentConfig {
  RegimeKind regime = RegimeKind::dcs;
  std::optional<int64_t> horizon_s;
  uint64_t seed = 0;
  int64_t prc_pbj = 0;
  int64_t prc_ws = 0;
  BatchTraceSpec batch;
  WsTraceSpec ws;
  std::optional<int64_t> cluster_size;
  std::optional<int64_t> policy_b;
  std::optional<double> policy_b_ratio;  // B = llround(ratio * (prc_pbj + prc_ws))
  PbjPolicyParams policy;
  int64_t setup_latency_s = 0;
  std::optional<int64_t> pbj_lower;
  std::optional<int64_t> ws_lower;
  std::optional<std::filesystem::path> pbj_re_spec_path;
  std::optional<std::filesystem::path> ws_re_spec_path;
  // sweep axes (cross product); values ascending
  std::vector<int64_t> sweep_cluster_size;
  std::vector<int64_t> sweep_b;
  std::vector<double> sweep_b_ratio;
  std::vector<double> sweep_u;
  std::vector<double> sweep_v;
  std::vector<double> sweep_g;
  std::vector<int64_t> sweep_l;
  bool emit_alloc_series = false;
  bool emit_job_records = false;
};

/// Strict loader: unknown keys anywhere in the document are errors. Relative
/// trace paths resolve against the config file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                             const std::filesystem::path& base_dir);

/// One report row: resolved per-run parameters plus the metrics.
struct ReportRow {
  std::string run_id;
  RunParams params;
  MetricsReport report;
  uint64_t seed = 0;
};

struct ExperimentOutcome {
  std::vector<ReportRow> rows;
  std::filesystem::path report_csv;
};

/// Resolve traces, expand the sweep, run every point (concurrently; outputs
/// are deterministic), and write report.csv plus any per-run series files
/// under out_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir,
                                 bool assert_invariants = false,
                                 int verbosity = 0);

/// Parsed-back report row (from report.csv) used by compare.
struct LoadedReportRow {
  std::string run_id;
  std::string regime;
  int64_t prc_pbj = 0;
  int64_t prc_ws = 0;
  int64_t horizon_s = 0;
  int64_t completed_jobs = 0;
  double avg_turnaround_s = 0;
  double avg_execution_s = 0;
  int64_t peak_resource_nodes = 0;
  double total_resource_node_hours = 0;
  int64_t mgmt_overhead_adjustments = 0;
};

std::vector<LoadedReportRow> load_report_csv(const std::filesystem::path& path);

/// Emit deltas and percent savings of every row against the baseline CSV's
/// first row. Rows must share horizon and workload tuple. Saved-resources %
/// is measured against (prc_pbj + prc_ws) * horizon.
void compare_reports(const std::filesystem::path& baseline_csv,
                     const std::vector<std::filesystem::path>& other_csvs,
                     const std::filesystem::path& out_csv);

// report.csv helpers shared by run/compare/tests
std::string report_csv_header();
std::string report_csv_row(const ReportRow& row);

}  // namespace phoenixsim
