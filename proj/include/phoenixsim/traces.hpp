#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace phoenixsim {

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One parallel batch job as read from a workload log.
struct Job {
  int64_t job_id = 0;
  int64_t submit_s = 0;   // seconds from trace start
  int64_t runtime_s = 1;  // >= 1
  int64_t nodes = 1;      // >= 1
};

/// Ordered batch-job trace. Jobs are sorted by (submit_s, job_id).
struct JobTrace {
  std::vector<Job> jobs;
  int64_t duration_s = 0;    // trace horizon, >= max submit_s
  int64_t peak_demand = 0;   // max over jobs of nodes

  void recompute_derived();  // peak + duration floor from jobs
};

/// Step-function time series of web-service node demand.
/// Sample times strictly increasing, first sample at t=0; the demand
/// between samples is the value of the most recent sample.
struct WsDemandTrace {
  std::vector<std::pair<int64_t, int64_t>> samples;  // (time_s, nodes)
  int64_t duration_s = 0;
  int64_t peak_demand = 0;

  int64_t demand_at(int64_t time_s) const;
  void recompute_derived();
};

struct AutoscalerParams {
  double util_threshold = 0.80;       // in (0,1)
  int64_t window_s = 20;              // >= 1
  int64_t initial_instances = 2;      // >= 1
  double capacity_per_instance = 0;   // requests/s at 100% utilization, > 0
};

/// One point of a request-rate input series.
struct RatePoint {
  int64_t time_s = 0;
  double requests_per_s = 0;
};

/// 1-based column indices into a whitespace-separated workload log line.
/// Defaults follow the common 18-column standard-workload layout.
struct SwfColumnMap {
  int submit = 2;
  int runtime = 4;
  int processors = 5;
  int requested_time = 9;  // fallback when runtime <= 0
};

struct SwfParseStats {
  int64_t parsed = 0;
  int64_t dropped = 0;  // lines with non-positive runtime/processors or too few fields
};

JobTrace parse_swf(const std::filesystem::path& path,
                   const SwfColumnMap& columns = {},
                   SwfParseStats* stats = nullptr);
JobTrace parse_swf(std::istream& in, const SwfColumnMap& columns = {},
                   SwfParseStats* stats = nullptr);

/// Keep jobs with start_s <= submit < start_s + length_s, rebased to 0.
/// The result may be empty; callers decide whether that deserves a warning.
JobTrace extract_segment(const JobTrace& trace, int64_t start_s, int64_t length_s);

/// nodes := ceil(nodes / cpus_per_node), clamped at 1.
JobTrace normalize_per_node_cpus(const JobTrace& trace, int64_t cpus_per_node);

/// Rescale every demand by target_peak/old_peak, round half up, then clamp
/// so the resulting peak equals target_peak exactly.
JobTrace scale_to_peak(const JobTrace& trace, int64_t target_peak);
WsDemandTrace scale_to_peak(const WsDemandTrace& trace, int64_t target_peak);

/// Per-tick instance decision: +1 to add, -1 to remove, 0 to hold.
/// Add iff mean utilization > threshold; remove iff n > 1 and mean
/// utilization < threshold * (n-1)/n. Both comparisons strict.
int autoscale_decision(double mean_util, int64_t instances, double util_threshold);

/// Drive the instance-adjustment rule over a request-rate series and emit the
/// resulting node-demand step series (one instance = one node).
WsDemandTrace autoscale_to_demand(std::span<const RatePoint> rates,
                                  const AutoscalerParams& params,
                                  int64_t sample_period_s);

/// Deterministic bursty web-service demand: flat base outside the given
/// windows, a ramp up to peak_nodes and back inside each one. Windows must
/// not overlap.
WsDemandTrace synth_bursty_ws(int64_t duration_s, int64_t base_nodes,
                              int64_t peak_nodes,
                              std::span<const std::pair<int64_t, int64_t>> burst_windows,
                              uint64_t seed);

// CSV I/O. Demand traces use the header "time_s,nodes"; request-rate series
// use "time_s,requests_per_s".
WsDemandTrace load_ws_demand_csv(const std::filesystem::path& path);
void save_ws_demand_csv(const WsDemandTrace& trace, const std::filesystem::path& path);
std::vector<RatePoint> load_rate_csv(const std::filesystem::path& path);

}  // namespace phoenixsim
