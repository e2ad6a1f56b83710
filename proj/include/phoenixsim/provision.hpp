#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phoenixsim/metrics.hpp"
#include "phoenixsim/re_spec.hpp"
#include "phoenixsim/sim_core.hpp"
#include "phoenixsim/traces.hpp"
#include "phoenixsim/tre_pbj.hpp"

namespace phoenixsim {

enum class RegimeKind : uint8_t { dcs, phoenix_fb, phoenix_flbnub, ec2_rightscale };

const char* to_string(RegimeKind k);
std::optional<RegimeKind> regime_from_string(const std::string& s);

/// Fully resolved parameters for one simulation run.
struct RunParams {
  RegimeKind regime = RegimeKind::dcs;
  int64_t horizon_s = 0;
  int64_t prc_pbj = 0;  // peak demand of the (scaled) batch trace
  int64_t prc_ws = 0;   // peak demand of the (scaled) WS trace
  // DCS: prc_pbj + prc_ws. FB: the coordinated pool, may be below that sum.
  std::optional<int64_t> cluster_size;
  int64_t coordinated_pool_b = 0;  // FLB-NUB lower bound for the PBJ TRE
  PbjPolicyParams policy;
  int64_t setup_latency_s = 0;
  // Startup split. Defaults (when <0): WS lower = initial WS demand; FB PBJ
  // lower = cluster_size - ws_lower; FLB-NUB PBJ lower = B.
  int64_t pbj_lower = -1;
  int64_t ws_lower = -1;
  bool assert_invariants = false;
};

struct RunResult {
  MetricsReport report;
  std::vector<JobRecord> jobs;
  std::vector<AllocSample> alloc_series;
};

/// Validate a run configuration against both traces; throws SimError with a
/// field-level message on inconsistency (e.g. FB web-service demand above the
/// coordinated pool).
void validate_run(const RunParams& params, const JobTrace& batch,
                  const WsDemandTrace& ws);

/// Execute one deterministic simulation run.
RunResult run_single(const RunParams& params, const JobTrace& batch,
                     const WsDemandTrace& ws);

}  // namespace phoenixsim
