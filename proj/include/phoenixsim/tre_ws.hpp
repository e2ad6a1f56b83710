#pragma once

#include <cstdint>

namespace phoenixsim {

/// Web-service TRE state: demand tracking plus the node-seconds of demand
/// the provider has not yet covered (only nonzero under setup latency).
struct WsState {
  int64_t current_demand = 0;
  int64_t last_account_s = 0;
  int64_t unmet_demand_node_s = 0;

  /// Advance the unmet-demand integral to now_s against the nodes the WS TRE
  /// actually owned over the elapsed interval. Call before changing either
  /// demand or ownership.
  void accrue(int64_t now_s, int64_t owned) {
    if (now_s > last_account_s) {
      int64_t short_nodes = current_demand - owned;
      if (short_nodes > 0)
        unmet_demand_node_s += short_nodes * (now_s - last_account_s);
      last_account_s = now_s;
    }
  }
};

/// Positive: nodes to request from the provider right now. Negative: nodes
/// to release. WS adjustments are immediate, never lease-quantized.
inline int64_t ws_demand_delta(int64_t owned, int64_t new_demand) {
  return new_demand - owned;
}

}  // namespace phoenixsim
