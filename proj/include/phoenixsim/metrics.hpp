#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "phoenixsim/tre_pbj.hpp"

namespace phoenixsim {

struct AllocSample {
  int64_t time_s = 0;
  int64_t pbj_owned = 0;
  int64_t pbj_in_use = 0;
  int64_t ws_owned = 0;
  int64_t provider_idle = 0;
};

/// Right-continuous step recorder for the allocation time series. Multiple
/// records at the same instant collapse to the settled state; exact
/// node-second integrals and the peak are maintained incrementally.
class AllocRecorder {
 public:
  void init(const AllocSample& initial);
  void record(const AllocSample& s);
  void finalize(int64_t horizon_s);

  const std::vector<AllocSample>& samples() const { return samples_; }
  int64_t pbj_node_s() const { return pbj_node_s_; }
  int64_t ws_node_s() const { return ws_node_s_; }
  int64_t peak_nodes() const { return peak_nodes_; }

 private:
  void advance_to(int64_t time_s);

  std::vector<AllocSample> samples_;
  AllocSample cur_{};
  bool started_ = false;
  bool finalized_ = false;
  int64_t pbj_node_s_ = 0;
  int64_t ws_node_s_ = 0;
  int64_t peak_nodes_ = 0;
};

struct MetricsReport {
  int64_t completed_jobs = 0;
  double avg_turnaround_s = 0;  // over completed jobs
  double avg_execution_s = 0;   // runtime of the final uninterrupted run
  int64_t peak_resource_nodes = 0;
  double total_resource_node_hours = 0;
  double pbj_node_hours = 0;
  double ws_node_hours = 0;
  int64_t mgmt_overhead_adjustments = 0;
  std::optional<int64_t> config_size_nodes;  // nullopt = unbounded
  int64_t horizon_s = 0;
  int64_t ws_unmet_node_s = 0;
};

/// Assemble the report from the per-job records and the finalized recorder.
MetricsReport finalize_metrics(std::span<const JobRecord> jobs,
                               const AllocRecorder& alloc,
                               int64_t adjustment_events, int64_t horizon_s,
                               std::optional<int64_t> config_size_nodes,
                               int64_t ws_unmet_node_s);

}  // namespace phoenixsim
