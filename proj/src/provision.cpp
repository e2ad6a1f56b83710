#include "phoenixsim/provision.hpp"

#include <algorithm>
#include <utility>

#include "phoenixsim/tre_ws.hpp"

namespace phoenixsim {

const char* to_string(RegimeKind k) {
  switch (k) {
    case RegimeKind::dcs: return "dcs";
    case RegimeKind::phoenix_fb: return "phoenix_fb";
    case RegimeKind::phoenix_flbnub: return "phoenix_flbnub";
    case RegimeKind::ec2_rightscale: return "ec2_rightscale";
  }
  return "?";
}

std::optional<RegimeKind> regime_from_string(const std::string& s) {
  if (s == "dcs") return RegimeKind::dcs;
  if (s == "phoenix_fb") return RegimeKind::phoenix_fb;
  if (s == "phoenix_flbnub") return RegimeKind::phoenix_flbnub;
  if (s == "ec2_rightscale") return RegimeKind::ec2_rightscale;
  return std::nullopt;
}

void validate_run(const RunParams& p, const JobTrace& batch, const WsDemandTrace& ws) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw SimError("run config: " + msg);
  };

  require(p.horizon_s >= 1, "horizon_s must be >= 1");
  require(!batch.jobs.empty(), "batch trace is empty");
  require(!ws.samples.empty() && ws.samples.front().first == 0,
          "WS demand trace must start at time 0");
  require(p.prc_pbj == batch.peak_demand,
          "prc_pbj must equal the batch trace peak (" +
              std::to_string(batch.peak_demand) + ")");
  require(p.prc_ws == ws.peak_demand,
          "prc_ws must equal the WS trace peak (" + std::to_string(ws.peak_demand) + ")");
  require(p.setup_latency_s >= 0, "setup_latency_s must be >= 0");

  const PbjPolicyParams& pol = p.policy;
  switch (p.regime) {
    case RegimeKind::dcs:
      require(!p.cluster_size || *p.cluster_size == p.prc_pbj + p.prc_ws,
              "DCS cluster_size is fixed at prc_pbj + prc_ws");
      break;
    case RegimeKind::phoenix_fb: {
      require(p.cluster_size.has_value(), "FB requires cluster_size");
      require(*p.cluster_size >= 1, "cluster_size must be >= 1");
      require(ws.peak_demand <= *p.cluster_size,
              "WS peak demand exceeds the coordinated pool");
      require(pol.lease_unit_s >= 1, "lease_unit_s must be >= 1");
      int64_t ws_lower = p.ws_lower >= 0 ? p.ws_lower : ws.samples.front().second;
      require(ws_lower <= *p.cluster_size, "ws lower bound exceeds cluster_size");
      int64_t pbj_lower = p.pbj_lower >= 0 ? p.pbj_lower : *p.cluster_size - ws_lower;
      require(pbj_lower >= 0 && pbj_lower + ws_lower <= *p.cluster_size,
              "lower bounds exceed cluster_size");
      break;
    }
    case RegimeKind::phoenix_flbnub:
      require(p.coordinated_pool_b >= 1, "FLB-NUB requires B >= 1");
      require(pol.threshold_request_u > 0, "U must be > 0");
      require(pol.threshold_release_v > 0 &&
                  pol.threshold_release_v < pol.threshold_request_u,
              "V must satisfy 0 < V < U");
      require(pol.elastic_factor_g > 0 && pol.elastic_factor_g < 1,
              "G must be in (0,1)");
      require(pol.lease_unit_s >= 1, "lease_unit_s must be >= 1");
      break;
    case RegimeKind::ec2_rightscale:
      require(pol.lease_unit_s >= 1, "lease_unit_s must be >= 1");
      break;
  }
}

namespace {

class Simulation {
 public:
  Simulation(const RunParams& p, const JobTrace& batch, const WsDemandTrace& ws_trace)
      : params_(p), batch_(batch), ws_trace_(ws_trace), engine_(p.horizon_s) {}

  RunResult run() {
    records_.reserve(batch_.jobs.size());
    for (const Job& j : batch_.jobs) records_.push_back(JobRecord{j});

    startup();
    seed_events();

    engine_.run([this](const Event& ev) { handle(ev); },
                [this](const Event& ev) { after_event(ev); });

    recorder_.finalize(params_.horizon_s);
    ws_.accrue(params_.horizon_s, ledger_.ws_owned);

    RunResult result;
    result.report = finalize_metrics(records_, recorder_, adjustments_,
                                     params_.horizon_s, config_size(),
                                     ws_.unmet_demand_node_s);
    result.jobs = std::move(records_);
    result.alloc_series = recorder_.samples();
    return result;
  }

 private:
  // ---- setup ----------------------------------------------------------

  std::optional<int64_t> config_size() const {
    switch (params_.regime) {
      case RegimeKind::dcs: return params_.prc_pbj + params_.prc_ws;
      case RegimeKind::phoenix_fb: return params_.cluster_size;
      default: return std::nullopt;  // abundant resources
    }
  }

  void startup() {
    ws_.current_demand = ws_trace_.samples.front().second;
    ws_lower_ = params_.ws_lower >= 0 ? params_.ws_lower : ws_.current_demand;

    // Startup allocations realize the lower bounds (or the static split) and
    // are not adjustment events: overhead counts dynamic changes only.
    switch (params_.regime) {
      case RegimeKind::dcs:
        ledger_.total_nodes = params_.prc_pbj + params_.prc_ws;
        ledger_.pbj_owned = params_.prc_pbj;
        ledger_.ws_owned = params_.prc_ws;
        break;
      case RegimeKind::phoenix_fb: {
        ledger_.total_nodes = *params_.cluster_size;
        pbj_lower_ = params_.pbj_lower >= 0 ? params_.pbj_lower
                                            : *params_.cluster_size - ws_lower_;
        ledger_.pbj_owned = pbj_lower_;
        ledger_.ws_owned = ws_lower_;
        ledger_.provider_idle = *params_.cluster_size - pbj_lower_ - ws_lower_;
        settle_ws_startup_fb();
        break;
      }
      case RegimeKind::phoenix_flbnub:
        pbj_lower_ = params_.coordinated_pool_b;
        ledger_.pbj_owned = pbj_lower_;
        ledger_.ws_owned = ws_.current_demand;
        break;
      case RegimeKind::ec2_rightscale:
        ledger_.ws_owned = ws_.current_demand;
        break;
    }

    ledger_.check("startup");
    recorder_.init(snapshot());
  }

  // Align WS ownership with its initial demand before service begins.
  void settle_ws_startup_fb() {
    int64_t demand = ws_.current_demand;
    if (ledger_.ws_owned > demand) {
      ledger_.provider_idle += ledger_.ws_owned - demand;
      ledger_.ws_owned = demand;
    } else if (ledger_.ws_owned < demand) {
      int64_t need = demand - ledger_.ws_owned;
      int64_t take = std::min(need, ledger_.provider_idle);
      ledger_.provider_idle -= take;
      ledger_.ws_owned += take;
      need -= take;
      if (need > 0) {
        // no jobs are running yet, so all PBJ nodes are idle
        take = std::min(need, ledger_.pbj_owned);
        ledger_.pbj_owned -= take;
        ledger_.ws_owned += take;
        need -= take;
      }
      if (need > 0)
        throw SimError("FB startup: WS demand exceeds the coordinated pool");
    }
  }

  void seed_events() {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      int64_t t = records_[i].job.submit_s;
      if (t <= params_.horizon_s)
        engine_.schedule(t, EventKind::job_submit, static_cast<int64_t>(i));
    }
    for (std::size_t i = 1; i < ws_trace_.samples.size(); ++i) {
      const auto& [t, demand] = ws_trace_.samples[i];
      if (t <= params_.horizon_s)
        engine_.schedule(t, EventKind::ws_demand_change, demand);
    }
    if (params_.regime == RegimeKind::phoenix_fb ||
        params_.regime == RegimeKind::phoenix_flbnub) {
      int64_t l = params_.policy.lease_unit_s;
      if (l <= params_.horizon_s) engine_.schedule(l, EventKind::lease_timer, -1);
    }
  }

  // ---- dispatch -------------------------------------------------------

  void handle(const Event& ev) {
    // bring the unmet-demand integral up to now before any state changes
    ws_.accrue(engine_.now(), ledger_.ws_owned);
    switch (ev.kind) {
      case EventKind::job_submit:
        on_job_submit(static_cast<std::size_t>(ev.p0));
        break;
      case EventKind::job_complete:
        on_job_complete(static_cast<std::size_t>(ev.p0), ev.p1);
        break;
      case EventKind::ws_demand_change:
        on_ws_demand_change(ev.p0);
        break;
      case EventKind::lease_timer:
        if (ev.p0 < 0)
          on_lease_tick();
        else
          on_ec2_lease_release(static_cast<std::size_t>(ev.p0));
        break;
      case EventKind::setup_done:
        on_setup_done(static_cast<std::size_t>(ev.p0));
        break;
    }
  }

  void after_event(const Event&) {
    recorder_.record(snapshot());
    if (params_.assert_invariants) {
      ledger_.check("after event");
      if (params_.setup_latency_s == 0 && params_.regime != RegimeKind::dcs &&
          ledger_.ws_owned != ws_.current_demand)
        throw SimError("WS ownership does not track demand at zero latency");
    }
  }

  AllocSample snapshot() const {
    return {engine_.now(), ledger_.pbj_owned, ledger_.pbj_in_use, ledger_.ws_owned,
            provider_idle_for_report()};
  }

  int64_t provider_idle_for_report() const {
    switch (params_.regime) {
      case RegimeKind::phoenix_fb: return ledger_.provider_idle;
      case RegimeKind::phoenix_flbnub: return flbnub_coordinated_idle();
      default: return 0;
    }
  }

  // ---- handlers -------------------------------------------------------

  void on_job_submit(std::size_t idx) {
    if (params_.regime == RegimeKind::ec2_rightscale) {
      start_ec2_job(idx);
      return;
    }
    queue_insert(idx);
    schedule_pass();
  }

  void on_job_complete(std::size_t idx, int64_t incarnation) {
    JobRecord& rec = records_[idx];
    if (rec.incarnation != incarnation || rec.state != JobState::running)
      return;  // completion of a killed run
    rec.state = JobState::completed;
    rec.completion_s = engine_.now();
    ledger_.pbj_in_use -= rec.job.nodes;
    if (params_.regime != RegimeKind::ec2_rightscale) schedule_pass();
    // EC2 holds the nodes until the job's own lease boundary
  }

  void on_ws_demand_change(int64_t new_demand) {
    ws_.current_demand = new_demand;
    switch (params_.regime) {
      case RegimeKind::dcs:
        break;  // static partition, nothing moves
      case RegimeKind::phoenix_fb:
        settle_ws_fb();
        break;
      case RegimeKind::phoenix_flbnub:
      case RegimeKind::ec2_rightscale:
        settle_ws_elastic();
        break;
    }
  }

  void on_lease_tick() {
    if (params_.regime == RegimeKind::phoenix_fb) {
      // provision all coordinated idle resources to the PBJ TRE
      transfer_counted(Pool::provider, Pool::pbj, ledger_.provider_idle,
                       params_.setup_latency_s);
      schedule_pass();
    } else if (params_.regime == RegimeKind::phoenix_flbnub) {
      transfer_counted(Pool::provider, Pool::pbj, flbnub_coordinated_idle(),
                       params_.setup_latency_s);
      flbnub_adjust_step();
      schedule_pass();
    }
    int64_t next = engine_.now() + params_.policy.lease_unit_s;
    if (next <= params_.horizon_s) engine_.schedule(next, EventKind::lease_timer, -1);
  }

  void on_ec2_lease_release(std::size_t idx) {
    transfer_counted(Pool::pbj, Pool::provider, records_[idx].job.nodes, 0);
  }

  void on_setup_done(std::size_t pending_idx) {
    Pool dest = ledger_.pending[pending_idx].dest;
    if (dest == Pool::ws) pending_to_ws_ -= ledger_.pending[pending_idx].nodes;
    if (dest == Pool::pbj) pending_to_pbj_ -= ledger_.pending[pending_idx].nodes;
    ledger_.apply_setup(pending_idx);
    if (dest == Pool::pbj) schedule_pass();
    // a freed-up provider or PBJ pool may finally cover a starved WS spike
    if (params_.regime == RegimeKind::phoenix_fb &&
        ledger_.ws_owned + pending_to_ws_ < ws_.current_demand)
      settle_ws_fb();
  }

  // ---- WS provisioning ------------------------------------------------

  void settle_ws_elastic() {
    int64_t covered = ledger_.ws_owned + pending_to_ws_;
    if (covered < ws_.current_demand) {
      transfer_counted(Pool::provider, Pool::ws, ws_.current_demand - covered,
                       params_.setup_latency_s);
    } else if (ledger_.ws_owned > ws_.current_demand) {
      transfer_counted(Pool::ws, Pool::provider, ledger_.ws_owned - ws_.current_demand,
                       params_.setup_latency_s);
    }
  }

  void settle_ws_fb() {
    int64_t covered = ledger_.ws_owned + pending_to_ws_;
    if (covered < ws_.current_demand) {
      int64_t need = ws_.current_demand - covered;
      int64_t from_idle = std::min(need, ledger_.provider_idle);
      transfer_counted(Pool::provider, Pool::ws, from_idle, params_.setup_latency_s);
      need -= from_idle;
      if (need > 0) force_pbj_release(need);
    } else if (ledger_.ws_owned > ws_.current_demand) {
      transfer_counted(Pool::ws, Pool::provider, ledger_.ws_owned - ws_.current_demand,
                       params_.setup_latency_s);
    }
  }

  void force_pbj_release(int64_t need) {
    std::vector<std::size_t> running;
    for (std::size_t i = 0; i < records_.size(); ++i)
      if (records_[i].state == JobState::running) running.push_back(i);

    KillPlan plan = fb_force_release(records_, running, need, ledger_.pbj_idle());
    for (std::size_t idx : plan.kills) kill_job(idx);

    int64_t give = std::min(need, ledger_.pbj_idle());
    transfer_counted(Pool::pbj, Pool::ws, give, params_.setup_latency_s);
    // any kill excess beyond the required size stays idle with the PBJ TRE;
    // a shortfall here means nodes are in flight and settle_ws_fb retries
    // when they arrive
  }

  void kill_job(std::size_t idx) {
    JobRecord& rec = records_[idx];
    rec.state = JobState::killed_requeued;
    rec.kill_count += 1;
    rec.incarnation += 1;  // orphans the scheduled completion
    rec.start_s = -1;
    ledger_.pbj_in_use -= rec.job.nodes;
    queue_insert(idx);
  }

  // ---- PBJ scheduling and adjustment ----------------------------------

  void queue_insert(std::size_t idx) {
    auto key = [this](std::size_t i) {
      return std::pair(records_[i].job.submit_s, records_[i].job.job_id);
    };
    auto it = std::lower_bound(queue_.begin(), queue_.end(), key(idx),
                               [&](std::size_t a, const auto& k) { return key(a) < k; });
    queue_.insert(it, idx);
  }

  void schedule_pass() {
    std::vector<std::size_t> started =
        first_fit_schedule(records_, queue_, ledger_.pbj_idle());
    if (started.empty()) return;

    for (std::size_t idx : started) {
      JobRecord& rec = records_[idx];
      rec.state = JobState::running;
      rec.start_s = engine_.now();
      ledger_.pbj_in_use += rec.job.nodes;
      engine_.schedule(engine_.now() + rec.job.runtime_s, EventKind::job_complete,
                       static_cast<int64_t>(idx), rec.incarnation);
    }

    std::size_t si = 0;  // started is a subsequence of queue_ in queue order
    queue_.erase(std::remove_if(queue_.begin(), queue_.end(),
                                [&](std::size_t idx) {
                                  if (si < started.size() && started[si] == idx) {
                                    ++si;
                                    return true;
                                  }
                                  return false;
                                }),
                 queue_.end());
  }

  int64_t flbnub_coordinated_idle() const {
    int64_t pool = params_.coordinated_pool_b + ws_lower_;
    int64_t held = ledger_.pbj_owned + pending_to_pbj_ + ledger_.ws_owned + pending_to_ws_;
    return std::max<int64_t>(0, pool - held);
  }

  void flbnub_adjust_step() {
    std::vector<int64_t> demands;
    demands.reserve(queue_.size());
    for (std::size_t idx : queue_) demands.push_back(records_[idx].job.nodes);

    int64_t owned_effective = ledger_.pbj_owned + pending_to_pbj_;
    AdjustAction action =
        flbnub_adjust(demands, owned_effective, ledger_.pbj_idle(), params_.policy);
    switch (action.kind) {
      case AdjustKind::request_dr1:
      case AdjustKind::request_dr2:
        transfer_counted(Pool::provider, Pool::pbj, action.nodes,
                         params_.setup_latency_s);
        break;
      case AdjustKind::release_rss: {
        // never release the lower bound itself, and only idle nodes
        int64_t releasable =
            std::min({action.nodes, ledger_.pbj_idle(),
                      std::max<int64_t>(0, ledger_.pbj_owned - params_.coordinated_pool_b)});
        transfer_counted(Pool::pbj, Pool::provider, releasable,
                         params_.setup_latency_s);
        break;
      }
      case AdjustKind::none:
        break;
    }
  }

  // ---- EC2 ------------------------------------------------------------

  void start_ec2_job(std::size_t idx) {
    JobRecord& rec = records_[idx];
    // end users allocate exactly the job's nodes and run immediately
    transfer_counted(Pool::provider, Pool::pbj, rec.job.nodes, 0);
    rec.state = JobState::running;
    rec.start_s = engine_.now();
    ledger_.pbj_in_use += rec.job.nodes;
    engine_.schedule(engine_.now() + rec.job.runtime_s, EventKind::job_complete,
                     static_cast<int64_t>(idx), rec.incarnation);

    int64_t l = params_.policy.lease_unit_s;
    int64_t lease_units = (rec.job.runtime_s + l - 1) / l;
    engine_.schedule(engine_.now() + lease_units * l, EventKind::lease_timer,
                     static_cast<int64_t>(idx));
  }

  // ---- plumbing -------------------------------------------------------

  /// Execute one transfer and count it as an adjustment event.
  void transfer_counted(Pool from, Pool to, int64_t n, int64_t latency_s) {
    if (n <= 0) return;
    auto pending = ledger_.transfer(from, to, n, latency_s, engine_.now());
    if (pending) {
      if (to == Pool::ws) pending_to_ws_ += n;
      if (to == Pool::pbj) pending_to_pbj_ += n;
      engine_.schedule(engine_.now() + latency_s, EventKind::setup_done,
                       static_cast<int64_t>(*pending));
    }
    ++adjustments_;
  }

  const RunParams& params_;
  const JobTrace& batch_;
  const WsDemandTrace& ws_trace_;
  Engine engine_;
  ClusterLedger ledger_;
  WsState ws_;
  std::vector<JobRecord> records_;
  std::vector<std::size_t> queue_;  // record indices, sorted by (submit, job_id)
  AllocRecorder recorder_;
  int64_t adjustments_ = 0;
  int64_t pending_to_ws_ = 0;
  int64_t pending_to_pbj_ = 0;
  int64_t pbj_lower_ = 0;
  int64_t ws_lower_ = 0;
};

}  // namespace

RunResult run_single(const RunParams& params, const JobTrace& batch,
                     const WsDemandTrace& ws) {
  validate_run(params, batch, ws);
  Simulation sim(params, batch, ws);
  return sim.run();
}

}  // namespace phoenixsim
