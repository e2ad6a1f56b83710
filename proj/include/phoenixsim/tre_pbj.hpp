#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phoenixsim/traces.hpp"

namespace phoenixsim {

enum class JobState : uint8_t { queued, running, killed_requeued, completed };

struct JobRecord {
  Job job;
  JobState state = JobState::queued;
  int64_t start_s = -1;       // -1 = never started
  int64_t completion_s = -1;  // -1 = not completed
  int64_t kill_count = 0;
  // Bumped on every kill; completion events carry the incarnation they
  // belong to so stale completions of killed runs are ignored.
  int64_t incarnation = 0;
};

/// FLB-NUB manager thresholds. Defaults are the baseline configuration.
struct PbjPolicyParams {
  double threshold_request_u = 1.2;  // > 0
  double threshold_release_v = 0.2;  // > 0, < U
  double elastic_factor_g = 0.5;     // in (0,1)
  int64_t lease_unit_s = 3600;       // time unit of leasing resources
};

/// One pass over the queue in arrival order; every job whose demand fits the
/// remaining idle nodes starts. Returns the starting record indices in queue
/// order; the caller applies the starts.
std::vector<std::size_t> first_fit_schedule(std::span<const JobRecord> records,
                                            std::span<const std::size_t> queue,
                                            int64_t idle_nodes);

/// Accumulated queued demand over currently owned nodes. Zero owned with a
/// nonempty queue reads as +infinity (forces a request); an empty queue is 0.
double ratio_of_adjusting(int64_t queued_demand_sum, int64_t owned);

enum class AdjustKind : uint8_t { none, request_dr1, request_dr2, release_rss };

struct AdjustAction {
  AdjustKind kind = AdjustKind::none;
  int64_t nodes = 0;
};

/// The lease-tick adjustment decision, evaluated in order:
///   (a) ratio > U            -> request DR1 = sum(queued) - owned
///   (b) biggest job > owned  -> request DR2 = biggest - idle_owned
///   (c) ratio < V            -> release RSS = floor(G * idle_owned), if >= 1
///   (d) otherwise none.
/// Exactly one action per tick. Sizes are the raw formula values; callers
/// apply pool constraints (e.g. never releasing below the lower bound).
AdjustAction flbnub_adjust(std::span<const int64_t> queued_demands, int64_t owned,
                           int64_t idle_owned, const PbjPolicyParams& params);

struct KillPlan {
  std::vector<std::size_t> kills;  // record indices, in kill order
  int64_t freed = 0;               // idle_owned plus killed nodes
  bool shortfall = false;          // freed < needed even after killing all
};

/// Forced release for the fixed-bound model: idle nodes go first, then
/// running jobs are killed smallest size first, latest start first within a
/// size, until freed >= needed (or everything is dead).
KillPlan fb_force_release(std::span<const JobRecord> records,
                          std::span<const std::size_t> running,
                          int64_t needed, int64_t idle_owned);

}  // namespace phoenixsim
