#include "phoenixsim/sim_core.hpp"

#include <string>

namespace phoenixsim {

std::optional<std::size_t> ClusterLedger::transfer(Pool from, Pool to, int64_t n,
                                                   int64_t setup_latency_s,
                                                   int64_t now_s) {
  if (n < 0) throw SimError("transfer of negative node count");
  if (n == 0) return std::nullopt;
  if (from == to) throw SimError("transfer between identical pools");

  // withdraw from the source; policies must never over-draw
  switch (from) {
    case Pool::provider:
      if (total_nodes) {
        if (provider_idle < n)
          throw SimError("accounting violation: provider idle " +
                         std::to_string(provider_idle) + " < transfer " +
                         std::to_string(n));
        provider_idle -= n;
      }
      // unbounded provider mints nodes
      break;
    case Pool::pbj:
      if (pbj_idle() < n)
        throw SimError("accounting violation: pbj idle " + std::to_string(pbj_idle()) +
                       " < transfer " + std::to_string(n));
      pbj_owned -= n;
      break;
    case Pool::ws:
      if (ws_owned < n)
        throw SimError("accounting violation: ws owned " + std::to_string(ws_owned) +
                       " < transfer " + std::to_string(n));
      ws_owned -= n;
      break;
  }

  if (setup_latency_s > 0) {
    pending.push_back({n, now_s + setup_latency_s, to, false});
    return pending.size() - 1;
  }

  switch (to) {
    case Pool::provider:
      if (total_nodes) provider_idle += n;
      // unbounded provider retires returned nodes
      break;
    case Pool::pbj:
      pbj_owned += n;
      break;
    case Pool::ws:
      ws_owned += n;
      break;
  }
  return std::nullopt;
}

void ClusterLedger::apply_setup(std::size_t pending_index) {
  if (pending_index >= pending.size()) throw SimError("unknown pending setup");
  PendingSetup& p = pending[pending_index];
  if (p.applied) throw SimError("pending setup applied twice");
  p.applied = true;
  switch (p.dest) {
    case Pool::provider:
      if (total_nodes) provider_idle += p.nodes;
      break;
    case Pool::pbj:
      pbj_owned += p.nodes;
      break;
    case Pool::ws:
      ws_owned += p.nodes;
      break;
  }
}

void ClusterLedger::check(const char* context) const {
  auto fail = [&](const std::string& what) {
    throw SimError(std::string("ledger invariant violated (") + context + "): " + what);
  };
  if (provider_idle < 0) fail("provider_idle < 0");
  if (pbj_owned < 0) fail("pbj_owned < 0");
  if (ws_owned < 0) fail("ws_owned < 0");
  if (pbj_in_use < 0 || pbj_in_use > pbj_owned)
    fail("pbj_in_use outside [0, pbj_owned]: in_use=" + std::to_string(pbj_in_use) +
         " owned=" + std::to_string(pbj_owned));
  if (total_nodes) {
    int64_t sum = provider_idle + pbj_owned + ws_owned + pending_total();
    if (sum != *total_nodes)
      fail("pool sum " + std::to_string(sum) + " != total " +
           std::to_string(*total_nodes) + " [idle=" + std::to_string(provider_idle) +
           " pbj=" + std::to_string(pbj_owned) + " ws=" + std::to_string(ws_owned) +
           " pending=" + std::to_string(pending_total()) + "]");
  }
}

}  // namespace phoenixsim
