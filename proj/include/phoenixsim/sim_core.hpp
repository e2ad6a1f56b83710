#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace phoenixsim {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EventKind : uint8_t {
  job_complete = 0,
  ws_demand_change = 1,
  lease_timer = 2,
  job_submit = 3,
  setup_done = 4,
};

/// Total order at equal times: completions free nodes before submissions or
/// timers see them; setup arrivals land last.
struct Event {
  int64_t time_s = 0;
  EventKind kind = EventKind::job_submit;
  uint64_t seq = 0;  // enqueue order, final tie-break
  int64_t p0 = 0;    // kind-specific payload
  int64_t p1 = 0;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time_s != b.time_s) return a.time_s > b.time_s;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.seq > b.seq;
  }
};

/// Deterministic virtual-time event loop. Handlers may only schedule at or
/// after the current time; violating that is a fatal determinism error.
class Engine {
 public:
  explicit Engine(int64_t horizon_s) : horizon_s_(horizon_s) {}

  int64_t now() const { return now_s_; }
  int64_t horizon() const { return horizon_s_; }

  void schedule(int64_t time_s, EventKind kind, int64_t p0 = 0, int64_t p1 = 0) {
    if (time_s < now_s_)
      throw SimError("event scheduled in the past: t=" + std::to_string(time_s) +
                     " now=" + std::to_string(now_s_));
    queue_.push(Event{time_s, kind, next_seq_++, p0, p1});
  }

  /// Process events in total order until the queue empties or the next event
  /// lies beyond the horizon. after_event runs once per processed event
  /// (state recording, invariant checks).
  void run(const std::function<void(const Event&)>& handler,
           const std::function<void(const Event&)>& after_event = {}) {
    while (!queue_.empty()) {
      Event ev = queue_.top();
      if (ev.time_s > horizon_s_) break;
      queue_.pop();
      now_s_ = ev.time_s;
      handler(ev);
      if (after_event) after_event(ev);
    }
  }

 private:
  int64_t now_s_ = 0;
  int64_t horizon_s_;
  uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
};

enum class Pool : uint8_t { provider, pbj, ws };

struct PendingSetup {
  int64_t nodes = 0;
  int64_t ready_s = 0;
  Pool dest = Pool::provider;
  bool applied = false;
};

/// Authoritative account of node ownership. total_nodes unset means the
/// provider pool is unbounded (public-cloud scenarios): withdrawals mint
/// nodes and deposits retire them, and no conservation sum applies.
struct ClusterLedger {
  std::optional<int64_t> total_nodes;
  int64_t provider_idle = 0;
  int64_t pbj_owned = 0;
  int64_t pbj_in_use = 0;
  int64_t ws_owned = 0;
  std::vector<PendingSetup> pending;

  int64_t pbj_idle() const { return pbj_owned - pbj_in_use; }

  int64_t pending_total() const {
    int64_t sum = 0;
    for (const auto& p : pending)
      if (!p.applied) sum += p.nodes;
    return sum;
  }

  /// Move n nodes between pools. With zero latency the move is atomic;
  /// otherwise the nodes leave the source now and a pending entry records
  /// when they join the destination (the caller schedules the setup_done
  /// event for the returned pending index). Over-drawing the source is an
  /// accounting violation and fatal.
  std::optional<std::size_t> transfer(Pool from, Pool to, int64_t n,
                                      int64_t setup_latency_s, int64_t now_s);

  /// Complete a pending setup: credit the destination.
  void apply_setup(std::size_t pending_index);

  /// Throws SimError on any conservation or sign violation.
  void check(const char* context) const;
};

}  // namespace phoenixsim
