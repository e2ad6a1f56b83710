#include "phoenixsim/tre_pbj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace phoenixsim {

std::vector<std::size_t> first_fit_schedule(std::span<const JobRecord> records,
                                            std::span<const std::size_t> queue,
                                            int64_t idle_nodes) {
  std::vector<std::size_t> started;
  int64_t remaining = idle_nodes;
  for (std::size_t idx : queue) {
    const JobRecord& rec = records[idx];
    if (rec.job.nodes <= remaining) {
      started.push_back(idx);
      remaining -= rec.job.nodes;
    }
  }
  return started;
}

double ratio_of_adjusting(int64_t queued_demand_sum, int64_t owned) {
  if (queued_demand_sum == 0) return 0.0;
  if (owned == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(queued_demand_sum) / static_cast<double>(owned);
}

AdjustAction flbnub_adjust(std::span<const int64_t> queued_demands, int64_t owned,
                           int64_t idle_owned, const PbjPolicyParams& params) {
  int64_t sum = 0;
  int64_t biggest = 0;
  for (int64_t d : queued_demands) {
    sum += d;
    biggest = std::max(biggest, d);
  }

  double ratio = ratio_of_adjusting(sum, owned);
  if (ratio > params.threshold_request_u) {
    int64_t dr1 = sum - owned;
    if (dr1 > 0) return {AdjustKind::request_dr1, dr1};
    return {AdjustKind::none, 0};
  }
  if (biggest > owned) {
    // the largest queued job cannot run within the current ownership
    return {AdjustKind::request_dr2, biggest - idle_owned};
  }
  if (ratio < params.threshold_release_v) {
    int64_t rss = static_cast<int64_t>(
        std::floor(params.elastic_factor_g * static_cast<double>(idle_owned)));
    if (rss >= 1) return {AdjustKind::release_rss, rss};
  }
  return {AdjustKind::none, 0};
}

KillPlan fb_force_release(std::span<const JobRecord> records,
                          std::span<const std::size_t> running,
                          int64_t needed, int64_t idle_owned) {
  KillPlan plan;
  plan.freed = idle_owned;
  if (plan.freed >= needed) return plan;

  std::vector<std::size_t> order(running.begin(), running.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Job& ja = records[a].job;
    const Job& jb = records[b].job;
    // smallest size first; latest start first within a size
    return std::tuple(ja.nodes, -records[a].start_s, ja.job_id) <
           std::tuple(jb.nodes, -records[b].start_s, jb.job_id);
  });

  for (std::size_t idx : order) {
    if (plan.freed >= needed) break;
    plan.kills.push_back(idx);
    plan.freed += records[idx].job.nodes;
  }
  plan.shortfall = plan.freed < needed;
  return plan;
}

}  // namespace phoenixsim
