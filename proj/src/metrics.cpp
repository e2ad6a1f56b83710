#include "phoenixsim/metrics.hpp"

#include <algorithm>

namespace phoenixsim {

void AllocRecorder::init(const AllocSample& initial) {
  cur_ = initial;
  samples_.clear();
  samples_.push_back(initial);
  started_ = true;
}

void AllocRecorder::advance_to(int64_t time_s) {
  // cur_ held over [cur_.time_s, time_s): positive width, so it counts
  // toward the integrals and the peak.
  int64_t width = time_s - cur_.time_s;
  pbj_node_s_ += cur_.pbj_owned * width;
  ws_node_s_ += cur_.ws_owned * width;
  peak_nodes_ = std::max(peak_nodes_, cur_.pbj_owned + cur_.ws_owned);
}

void AllocRecorder::record(const AllocSample& s) {
  auto same = [](const AllocSample& a, const AllocSample& b) {
    return a.pbj_owned == b.pbj_owned && a.pbj_in_use == b.pbj_in_use &&
           a.ws_owned == b.ws_owned && a.provider_idle == b.provider_idle;
  };
  if (same(s, cur_)) return;
  if (s.time_s == cur_.time_s) {
    // settle: overwrite the zero-width state at this instant
    cur_ = s;
    samples_.back() = s;
    return;
  }
  advance_to(s.time_s);
  cur_ = s;
  samples_.push_back(s);
}

void AllocRecorder::finalize(int64_t horizon_s) {
  if (finalized_) return;
  advance_to(std::max(horizon_s, cur_.time_s));
  // the settled state at the horizon itself still counts for the peak
  peak_nodes_ = std::max(peak_nodes_, cur_.pbj_owned + cur_.ws_owned);
  finalized_ = true;
}

MetricsReport finalize_metrics(std::span<const JobRecord> jobs,
                               const AllocRecorder& alloc,
                               int64_t adjustment_events, int64_t horizon_s,
                               std::optional<int64_t> config_size_nodes,
                               int64_t ws_unmet_node_s) {
  MetricsReport r;
  r.horizon_s = horizon_s;
  r.config_size_nodes = config_size_nodes;
  r.mgmt_overhead_adjustments = adjustment_events;
  r.ws_unmet_node_s = ws_unmet_node_s;

  int64_t turnaround_sum = 0;
  int64_t execution_sum = 0;
  for (const JobRecord& rec : jobs) {
    if (rec.state != JobState::completed || rec.completion_s > horizon_s) continue;
    ++r.completed_jobs;
    turnaround_sum += rec.completion_s - rec.job.submit_s;
    execution_sum += rec.job.runtime_s;
  }
  if (r.completed_jobs > 0) {
    r.avg_turnaround_s = static_cast<double>(turnaround_sum) /
                         static_cast<double>(r.completed_jobs);
    r.avg_execution_s = static_cast<double>(execution_sum) /
                        static_cast<double>(r.completed_jobs);
  }

  r.peak_resource_nodes = alloc.peak_nodes();
  r.pbj_node_hours = static_cast<double>(alloc.pbj_node_s()) / 3600.0;
  r.ws_node_hours = static_cast<double>(alloc.ws_node_s()) / 3600.0;
  r.total_resource_node_hours =
      static_cast<double>(alloc.pbj_node_s() + alloc.ws_node_s()) / 3600.0;
  return r;
}

}  // namespace phoenixsim
