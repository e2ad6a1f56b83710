#include "phoenixsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "phoenixsim/re_spec.hpp"

namespace phoenixsim {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("config: " + ctx + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) known = true;
    if (!known) throw ConfigError("config: unknown key '" + ctx + "." + key + "'");
  }
}

int64_t get_int(const json& obj, const std::string& ctx, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError("config: " + ctx + "." + key + " must be an integer");
  return v.get<int64_t>();
}

double get_num(const json& obj, const std::string& ctx, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_number())
    throw ConfigError("config: " + ctx + "." + key + " must be a number");
  return v.get<double>();
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string fmt_fixed1(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string fmt_fixed3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return experiment_config_from_json(doc, path.parent_path());
}

ExperimentConfig experiment_config_from_json(const json& doc,
                                             const std::filesystem::path& base_dir) {
  check_keys(doc, "<root>",
             {"regime", "horizon_s", "seed", "tuple", "batch_trace", "ws_trace",
              "cluster_size", "policy", "setup_latency_s", "bounds", "re_specs",
              "sweep", "output"});

  ExperimentConfig cfg;

  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base_dir / fp;
  };

  {
    std::string regime = doc.at("regime").get<std::string>();
    auto kind = regime_from_string(regime);
    if (!kind) throw ConfigError("config: unknown regime '" + regime + "'");
    cfg.regime = *kind;
  }
  if (doc.contains("horizon_s")) cfg.horizon_s = get_int(doc, "<root>", "horizon_s");
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<uint64_t>();

  {
    const json& tuple = doc.at("tuple");
    check_keys(tuple, "tuple", {"prc_pbj", "prc_ws"});
    cfg.prc_pbj = get_int(tuple, "tuple", "prc_pbj");
    cfg.prc_ws = get_int(tuple, "tuple", "prc_ws");
    if (cfg.prc_pbj < 1 || cfg.prc_ws < 1)
      throw ConfigError("config: tuple values must be >= 1");
  }

  {
    const json& bt = doc.at("batch_trace");
    check_keys(bt, "batch_trace", {"path", "columns", "segment", "cpus_per_node"});
    cfg.batch.path = resolve(bt.at("path").get<std::string>());
    if (bt.contains("columns")) {
      const json& c = bt.at("columns");
      check_keys(c, "batch_trace.columns",
                 {"submit", "runtime", "processors", "requested_time"});
      if (c.contains("submit"))
        cfg.batch.columns.submit = static_cast<int>(get_int(c, "columns", "submit"));
      if (c.contains("runtime"))
        cfg.batch.columns.runtime = static_cast<int>(get_int(c, "columns", "runtime"));
      if (c.contains("processors"))
        cfg.batch.columns.processors =
            static_cast<int>(get_int(c, "columns", "processors"));
      if (c.contains("requested_time"))
        cfg.batch.columns.requested_time =
            static_cast<int>(get_int(c, "columns", "requested_time"));
    }
    if (bt.contains("segment")) {
      const json& s = bt.at("segment");
      check_keys(s, "batch_trace.segment", {"start_s", "length_s"});
      cfg.batch.segment = {get_int(s, "segment", "start_s"),
                           get_int(s, "segment", "length_s")};
    }
    if (bt.contains("cpus_per_node"))
      cfg.batch.cpus_per_node = get_int(bt, "batch_trace", "cpus_per_node");
  }

  {
    const json& wt = doc.at("ws_trace");
    check_keys(wt, "ws_trace", {"path", "synth", "autoscale"});
    int sources = static_cast<int>(wt.contains("path")) +
                  static_cast<int>(wt.contains("synth")) +
                  static_cast<int>(wt.contains("autoscale"));
    if (sources != 1)
      throw ConfigError("config: ws_trace needs exactly one of path/synth/autoscale");
    if (wt.contains("path")) {
      cfg.ws.path = resolve(wt.at("path").get<std::string>());
    } else if (wt.contains("synth")) {
      const json& s = wt.at("synth");
      check_keys(s, "ws_trace.synth",
                 {"duration_s", "base_nodes", "peak_nodes", "burst_windows", "seed"});
      WsSynthSpec synth;
      synth.duration_s = get_int(s, "synth", "duration_s");
      synth.base_nodes = get_int(s, "synth", "base_nodes");
      synth.peak_nodes = get_int(s, "synth", "peak_nodes");
      if (s.contains("burst_windows"))
        for (const auto& w : s.at("burst_windows")) {
          if (!w.is_array() || w.size() != 2)
            throw ConfigError("config: burst_windows entries must be [start_s, end_s]");
          synth.burst_windows.emplace_back(w[0].get<int64_t>(), w[1].get<int64_t>());
        }
      if (s.contains("seed")) synth.seed = s.at("seed").get<uint64_t>();
      cfg.ws.synth = synth;
    } else {
      const json& a = wt.at("autoscale");
      check_keys(a, "ws_trace.autoscale",
                 {"rates_path", "util_threshold", "window_s", "initial_instances",
                  "capacity_per_instance", "sample_period_s"});
      WsAutoscaleSpec as;
      as.rates_path = resolve(a.at("rates_path").get<std::string>());
      if (a.contains("util_threshold"))
        as.params.util_threshold = get_num(a, "autoscale", "util_threshold");
      if (a.contains("window_s"))
        as.params.window_s = get_int(a, "autoscale", "window_s");
      if (a.contains("initial_instances"))
        as.params.initial_instances = get_int(a, "autoscale", "initial_instances");
      as.params.capacity_per_instance = get_num(a, "autoscale", "capacity_per_instance");
      if (a.contains("sample_period_s"))
        as.sample_period_s = get_int(a, "autoscale", "sample_period_s");
      cfg.ws.autoscale = as;
    }
  }

  if (doc.contains("cluster_size"))
    cfg.cluster_size = get_int(doc, "<root>", "cluster_size");

  if (doc.contains("policy")) {
    const json& p = doc.at("policy");
    check_keys(p, "policy", {"B", "B_ratio", "U", "V", "G", "L_s"});
    if (p.contains("B") && p.contains("B_ratio"))
      throw ConfigError("config: give policy.B or policy.B_ratio, not both");
    if (p.contains("B")) cfg.policy_b = get_int(p, "policy", "B");
    if (p.contains("B_ratio")) cfg.policy_b_ratio = get_num(p, "policy", "B_ratio");
    if (p.contains("U")) cfg.policy.threshold_request_u = get_num(p, "policy", "U");
    if (p.contains("V")) cfg.policy.threshold_release_v = get_num(p, "policy", "V");
    if (p.contains("G")) cfg.policy.elastic_factor_g = get_num(p, "policy", "G");
    if (p.contains("L_s")) cfg.policy.lease_unit_s = get_int(p, "policy", "L_s");
  }

  if (doc.contains("setup_latency_s"))
    cfg.setup_latency_s = get_int(doc, "<root>", "setup_latency_s");

  if (doc.contains("bounds")) {
    const json& b = doc.at("bounds");
    check_keys(b, "bounds", {"pbj_lower", "ws_lower"});
    if (b.contains("pbj_lower")) cfg.pbj_lower = get_int(b, "bounds", "pbj_lower");
    if (b.contains("ws_lower")) cfg.ws_lower = get_int(b, "bounds", "ws_lower");
  }

  if (doc.contains("re_specs")) {
    const json& r = doc.at("re_specs");
    check_keys(r, "re_specs", {"pbj_path", "ws_path"});
    cfg.pbj_re_spec_path = resolve(r.at("pbj_path").get<std::string>());
    cfg.ws_re_spec_path = resolve(r.at("ws_path").get<std::string>());
  }

  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    check_keys(s, "sweep", {"cluster_size", "B", "B_ratio", "U", "V", "G", "L_s"});
    auto ints = [&](const char* key, std::vector<int64_t>& out) {
      if (!s.contains(key)) return;
      for (const auto& v : s.at(key)) out.push_back(v.get<int64_t>());
      std::sort(out.begin(), out.end());
    };
    auto nums = [&](const char* key, std::vector<double>& out) {
      if (!s.contains(key)) return;
      for (const auto& v : s.at(key)) out.push_back(v.get<double>());
      std::sort(out.begin(), out.end());
    };
    ints("cluster_size", cfg.sweep_cluster_size);
    ints("B", cfg.sweep_b);
    nums("B_ratio", cfg.sweep_b_ratio);
    nums("U", cfg.sweep_u);
    nums("V", cfg.sweep_v);
    nums("G", cfg.sweep_g);
    ints("L_s", cfg.sweep_l);
    if (!cfg.sweep_b.empty() && !cfg.sweep_b_ratio.empty())
      throw ConfigError("config: sweep B or B_ratio, not both");
  }

  if (doc.contains("output")) {
    const json& o = doc.at("output");
    check_keys(o, "output", {"alloc_series", "job_records"});
    if (o.contains("alloc_series")) cfg.emit_alloc_series = o.at("alloc_series").get<bool>();
    if (o.contains("job_records")) cfg.emit_job_records = o.at("job_records").get<bool>();
  }

  return cfg;
}

namespace {

struct ResolvedTraces {
  JobTrace batch;
  WsDemandTrace ws;
  int64_t horizon_s = 0;
};

ResolvedTraces resolve_traces(const ExperimentConfig& cfg) {
  ResolvedTraces out;
  out.batch = parse_swf(cfg.batch.path, cfg.batch.columns);
  if (cfg.batch.segment) {
    out.batch = extract_segment(out.batch, cfg.batch.segment->first,
                                cfg.batch.segment->second);
    if (out.batch.jobs.empty())
      throw ConfigError("config: batch segment selects no jobs");
  }
  if (cfg.batch.cpus_per_node > 1)
    out.batch = normalize_per_node_cpus(out.batch, cfg.batch.cpus_per_node);
  out.batch = scale_to_peak(out.batch, cfg.prc_pbj);

  if (cfg.ws.path) {
    out.ws = load_ws_demand_csv(*cfg.ws.path);
  } else if (cfg.ws.synth) {
    const WsSynthSpec& s = *cfg.ws.synth;
    out.ws = synth_bursty_ws(s.duration_s, s.base_nodes, s.peak_nodes,
                             s.burst_windows, s.seed);
  } else {
    const WsAutoscaleSpec& a = *cfg.ws.autoscale;
    auto rates = load_rate_csv(a.rates_path);
    out.ws = autoscale_to_demand(rates, a.params, a.sample_period_s);
  }
  out.ws = scale_to_peak(out.ws, cfg.prc_ws);

  out.horizon_s = cfg.horizon_s.value_or(
      std::max(out.batch.duration_s, out.ws.duration_s));
  if (out.horizon_s < 1) throw ConfigError("config: horizon_s must be >= 1");
  return out;
}

/// Build the runtime-environment documents for one run and push them through
/// validation (and pairing, for the coordinated regimes).
void check_re_specs(const ExperimentConfig& cfg, const RunParams& p,
                    int64_t ws_initial_demand) {
  RuntimeEnvSpec pbj_spec, ws_spec;
  bool from_files = cfg.pbj_re_spec_path.has_value();
  if (from_files) {
    pbj_spec = load_re_spec(*cfg.pbj_re_spec_path);
    ws_spec = load_re_spec(*cfg.ws_re_spec_path);
    if (pbj_spec.workload_type != WorkloadType::parallel_batch_jobs ||
        ws_spec.workload_type != WorkloadType::web_service)
      throw ConfigError("re_specs: need one parallel_batch_jobs and one web_service document");
  } else {
    CoordinationModel model = CoordinationModel::none;
    if (p.regime == RegimeKind::phoenix_fb) model = CoordinationModel::fb;
    if (p.regime == RegimeKind::phoenix_flbnub) model = CoordinationModel::flb_nub;

    int64_t ws_lower = p.ws_lower >= 0 ? p.ws_lower : ws_initial_demand;
    int64_t pbj_lower = p.pbj_lower;
    if (pbj_lower < 0)
      pbj_lower = p.regime == RegimeKind::phoenix_fb
                      ? *p.cluster_size - ws_lower
                      : (p.regime == RegimeKind::phoenix_flbnub ? p.coordinated_pool_b
                                                                : p.prc_pbj);

    pbj_spec.workload_type = WorkloadType::parallel_batch_jobs;
    ws_spec.workload_type = WorkloadType::web_service;
    pbj_spec.coordination_model = ws_spec.coordination_model = model;
    pbj_spec.allow_coordination_same_provider = ws_spec.allow_coordination_same_provider =
        model != CoordinationModel::none;
    pbj_spec.lower_bound = pbj_lower;
    ws_spec.lower_bound = ws_lower;
    if (model == CoordinationModel::fb) {
      pbj_spec.upper_bound = pbj_lower;
      ws_spec.upper_bound = ws_lower;
    }
    if (p.regime == RegimeKind::dcs) {
      pbj_spec.upper_bound = pbj_lower;
      ws_spec.upper_bound = ws_lower;
      pbj_spec.provider_relationship = ws_spec.provider_relationship =
          ProviderRelationship::same;
    }
    pbj_spec.setup_latency_s = ws_spec.setup_latency_s = p.setup_latency_s;
  }

  for (const auto& [name, spec] :
       {std::pair{"pbj", &pbj_spec}, std::pair{"ws", &ws_spec}}) {
    auto violations = validate(*spec);
    if (!violations.empty())
      throw ConfigError(std::string("re_spec (") + name + "): " +
                        violations.front().field + " " + violations.front().rule);
  }

  bool coordinated = p.regime == RegimeKind::phoenix_fb ||
                     p.regime == RegimeKind::phoenix_flbnub;
  if (coordinated) {
    CoordinationModel want = p.regime == RegimeKind::phoenix_fb
                                 ? CoordinationModel::fb
                                 : CoordinationModel::flb_nub;
    if (pbj_spec.coordination_model != want || ws_spec.coordination_model != want)
      throw ConfigError("re_specs: coordination_model does not match the regime");
    std::vector<RuntimeEnvSpec> both{pbj_spec, ws_spec};
    auto outcome = pair(both, p.coordinated_pool_b);
    if (!outcome.group)
      throw ConfigError("re_specs: the two runtime environments cannot be paired");
  }
}

std::string run_id_for(const RunParams& p) {
  std::ostringstream id;
  id << to_string(p.regime);
  switch (p.regime) {
    case RegimeKind::dcs:
      break;
    case RegimeKind::phoenix_fb:
      id << "_C" << *p.cluster_size << "_L" << p.policy.lease_unit_s;
      break;
    case RegimeKind::phoenix_flbnub:
      id << "_B" << p.coordinated_pool_b << "_U" << fmt_g(p.policy.threshold_request_u)
         << "_V" << fmt_g(p.policy.threshold_release_v) << "_G"
         << fmt_g(p.policy.elastic_factor_g) << "_L" << p.policy.lease_unit_s;
      break;
    case RegimeKind::ec2_rightscale:
      id << "_L" << p.policy.lease_unit_s;
      break;
  }
  return id.str();
}

std::vector<RunParams> expand_sweep(const ExperimentConfig& cfg,
                                    const ResolvedTraces& traces) {
  RunParams base;
  base.regime = cfg.regime;
  base.horizon_s = traces.horizon_s;
  base.prc_pbj = cfg.prc_pbj;
  base.prc_ws = cfg.prc_ws;
  base.policy = cfg.policy;
  base.setup_latency_s = cfg.setup_latency_s;
  if (cfg.pbj_lower) base.pbj_lower = *cfg.pbj_lower;
  if (cfg.ws_lower) base.ws_lower = *cfg.ws_lower;

  auto b_from_ratio = [&](double ratio) {
    return std::llround(ratio * static_cast<double>(cfg.prc_pbj + cfg.prc_ws));
  };

  bool is_fb = cfg.regime == RegimeKind::phoenix_fb;
  bool is_flbnub = cfg.regime == RegimeKind::phoenix_flbnub;
  bool uses_lease = cfg.regime != RegimeKind::dcs;

  if (!cfg.sweep_cluster_size.empty() && !is_fb)
    throw ConfigError("config: the cluster_size sweep applies to phoenix_fb only");
  if (cfg.cluster_size && !is_fb && cfg.regime != RegimeKind::dcs)
    throw ConfigError("config: cluster_size applies to phoenix_fb only");
  if (!is_flbnub &&
      (!cfg.sweep_b.empty() || !cfg.sweep_b_ratio.empty() || !cfg.sweep_u.empty() ||
       !cfg.sweep_v.empty() || !cfg.sweep_g.empty() || cfg.policy_b || cfg.policy_b_ratio))
    throw ConfigError("config: B/U/V/G apply to phoenix_flbnub only");
  if (!uses_lease && !cfg.sweep_l.empty())
    throw ConfigError("config: the L_s sweep does not apply to dcs");

  std::vector<int64_t> clusters;
  if (is_fb) {
    clusters = cfg.sweep_cluster_size;
    if (clusters.empty()) {
      if (!cfg.cluster_size)
        throw ConfigError("config: phoenix_fb requires cluster_size");
      clusters = {*cfg.cluster_size};
    }
  } else {
    clusters = {0};  // unused
  }

  std::vector<int64_t> bs;
  if (is_flbnub) {
    if (!cfg.sweep_b.empty()) {
      bs = cfg.sweep_b;
    } else if (!cfg.sweep_b_ratio.empty()) {
      for (double r : cfg.sweep_b_ratio) bs.push_back(b_from_ratio(r));
    } else if (cfg.policy_b) {
      bs = {*cfg.policy_b};
    } else if (cfg.policy_b_ratio) {
      bs = {b_from_ratio(*cfg.policy_b_ratio)};
    } else {
      throw ConfigError("config: phoenix_flbnub requires policy.B or policy.B_ratio");
    }
  } else {
    bs = {0};
  }

  auto one_or = [](const std::vector<double>& axis, double fallback) {
    return axis.empty() ? std::vector<double>{fallback} : axis;
  };
  std::vector<double> us = one_or(cfg.sweep_u, cfg.policy.threshold_request_u);
  std::vector<double> vs = one_or(cfg.sweep_v, cfg.policy.threshold_release_v);
  std::vector<double> gs = one_or(cfg.sweep_g, cfg.policy.elastic_factor_g);
  std::vector<int64_t> ls =
      cfg.sweep_l.empty() ? std::vector<int64_t>{cfg.policy.lease_unit_s} : cfg.sweep_l;

  std::vector<RunParams> runs;
  for (int64_t c : clusters)
    for (int64_t b : bs)
      for (double u : us)
        for (double v : vs)
          for (double g : gs)
            for (int64_t l : ls) {
              RunParams p = base;
              if (is_fb) p.cluster_size = c;
              if (cfg.regime == RegimeKind::dcs)
                p.cluster_size = cfg.prc_pbj + cfg.prc_ws;
              p.coordinated_pool_b = b;
              p.policy.threshold_request_u = u;
              p.policy.threshold_release_v = v;
              p.policy.elastic_factor_g = g;
              p.policy.lease_unit_s = l;
              runs.push_back(p);
            }
  return runs;
}

void write_job_csv(const std::filesystem::path& path, std::span<const JobRecord> jobs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "job_id,submit_s,start_s,completion_s,nodes,kill_count,turnaround_s,execution_s\n";
  for (const JobRecord& rec : jobs) {
    out << rec.job.job_id << ',' << rec.job.submit_s << ',';
    if (rec.start_s >= 0) out << rec.start_s;
    out << ',';
    if (rec.completion_s >= 0) out << rec.completion_s;
    out << ',' << rec.job.nodes << ',' << rec.kill_count << ',';
    if (rec.state == JobState::completed)
      out << (rec.completion_s - rec.job.submit_s) << ',' << rec.job.runtime_s;
    else
      out << ',';
    out << '\n';
  }
}

void write_alloc_csv(const std::filesystem::path& path,
                     std::span<const AllocSample> samples) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "time_s,pbj_owned,pbj_in_use,ws_owned,provider_idle\n";
  for (const AllocSample& s : samples)
    out << s.time_s << ',' << s.pbj_owned << ',' << s.pbj_in_use << ','
        << s.ws_owned << ',' << s.provider_idle << '\n';
}

}  // namespace

std::string report_csv_header() {
  return "run_id,regime,prc_pbj,prc_ws,config_size_nodes,B,U,V,G,L_s,"
         "setup_latency_s,seed,horizon_s,completed_jobs,avg_turnaround_s,"
         "avg_execution_s,peak_resource_nodes,total_resource_node_hours,"
         "pbj_node_hours,ws_node_hours,mgmt_overhead_adjustments,ws_unmet_node_s";
}

std::string report_csv_row(const ReportRow& row) {
  const RunParams& p = row.params;
  const MetricsReport& m = row.report;
  std::ostringstream out;
  out << row.run_id << ',' << to_string(p.regime) << ',' << p.prc_pbj << ','
      << p.prc_ws << ',';
  if (m.config_size_nodes)
    out << *m.config_size_nodes;
  else
    out << "unbounded";
  out << ',';
  if (p.regime == RegimeKind::phoenix_flbnub)
    out << p.coordinated_pool_b << ',' << fmt_g(p.policy.threshold_request_u) << ','
        << fmt_g(p.policy.threshold_release_v) << ','
        << fmt_g(p.policy.elastic_factor_g) << ',';
  else
    out << ",,,,";
  if (p.regime != RegimeKind::dcs)
    out << p.policy.lease_unit_s;
  out << ',' << p.setup_latency_s << ',' << row.seed << ',' << m.horizon_s << ','
      << m.completed_jobs << ',' << std::llround(m.avg_turnaround_s) << ','
      << std::llround(m.avg_execution_s) << ',' << m.peak_resource_nodes << ','
      << fmt_fixed1(m.total_resource_node_hours) << ','
      << fmt_fixed1(m.pbj_node_hours) << ',' << fmt_fixed1(m.ws_node_hours) << ','
      << m.mgmt_overhead_adjustments << ',' << m.ws_unmet_node_s;
  return out.str();
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out_dir,
                                 bool assert_invariants, int verbosity) {
  ResolvedTraces traces = resolve_traces(cfg);
  std::vector<RunParams> runs = expand_sweep(cfg, traces);
  int64_t ws_initial = traces.ws.samples.front().second;

  for (RunParams& p : runs) {
    p.assert_invariants = assert_invariants;
    try {
      validate_run(p, traces.batch, traces.ws);
    } catch (const SimError& e) {
      throw ConfigError(std::string(e.what()) + " [" + run_id_for(p) + "]");
    }
    check_re_specs(cfg, p, ws_initial);
  }

  std::vector<RunResult> results(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  {
    std::atomic<std::size_t> next{0};
    unsigned workers = std::max(1u, std::min<unsigned>(
        std::thread::hardware_concurrency(), static_cast<unsigned>(runs.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < runs.size();
             i = next.fetch_add(1)) {
          try {
            results[i] = run_single(runs[i], traces.batch, traces.ws);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::filesystem::create_directories(out_dir);
  ExperimentOutcome outcome;
  outcome.report_csv = out_dir / "report.csv";
  std::ofstream report(outcome.report_csv);
  if (!report) throw ConfigError("cannot write " + outcome.report_csv.string());
  report << report_csv_header() << '\n';

  for (std::size_t i = 0; i < runs.size(); ++i) {
    ReportRow row;
    row.run_id = run_id_for(runs[i]);
    row.params = runs[i];
    row.report = results[i].report;
    row.seed = cfg.seed;
    report << report_csv_row(row) << '\n';
    if (verbosity > 0)
      std::cout << row.run_id << ": jobs=" << row.report.completed_jobs
                << " turnaround=" << std::llround(row.report.avg_turnaround_s)
                << "s peak=" << row.report.peak_resource_nodes
                << " total=" << fmt_fixed1(row.report.total_resource_node_hours)
                << " node-hours adjustments=" << row.report.mgmt_overhead_adjustments
                << '\n';
    if (cfg.emit_job_records)
      write_job_csv(out_dir / ("jobs_" + row.run_id + ".csv"), results[i].jobs);
    if (cfg.emit_alloc_series)
      write_alloc_csv(out_dir / ("alloc_" + row.run_id + ".csv"),
                      results[i].alloc_series);
    outcome.rows.push_back(std::move(row));
  }
  return outcome;
}

std::vector<LoadedReportRow> load_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty report: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::map<std::string, std::size_t> col;
  {
    std::istringstream header(line);
    std::string name;
    std::size_t i = 0;
    while (std::getline(header, name, ',')) col[name] = i++;
  }
  for (const char* need :
       {"run_id", "regime", "prc_pbj", "prc_ws", "horizon_s", "completed_jobs",
        "avg_turnaround_s", "avg_execution_s", "peak_resource_nodes",
        "total_resource_node_hours", "mgmt_overhead_adjustments"})
    if (!col.count(need))
      throw ConfigError("report " + path.string() + " lacks column " + need);

  std::vector<LoadedReportRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    fields.resize(col.size());

    LoadedReportRow r;
    r.run_id = fields[col["run_id"]];
    r.regime = fields[col["regime"]];
    r.prc_pbj = std::stoll(fields[col["prc_pbj"]]);
    r.prc_ws = std::stoll(fields[col["prc_ws"]]);
    r.horizon_s = std::stoll(fields[col["horizon_s"]]);
    r.completed_jobs = std::stoll(fields[col["completed_jobs"]]);
    r.avg_turnaround_s = std::stod(fields[col["avg_turnaround_s"]]);
    r.avg_execution_s = std::stod(fields[col["avg_execution_s"]]);
    r.peak_resource_nodes = std::stoll(fields[col["peak_resource_nodes"]]);
    r.total_resource_node_hours = std::stod(fields[col["total_resource_node_hours"]]);
    r.mgmt_overhead_adjustments = std::stoll(fields[col["mgmt_overhead_adjustments"]]);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ConfigError("report has no rows: " + path.string());
  return rows;
}

void compare_reports(const std::filesystem::path& baseline_csv,
                     const std::vector<std::filesystem::path>& other_csvs,
                     const std::filesystem::path& out_csv) {
  auto baseline_rows = load_report_csv(baseline_csv);
  const LoadedReportRow& base = baseline_rows.front();

  std::vector<LoadedReportRow> rows = baseline_rows;
  for (const auto& p : other_csvs) {
    auto more = load_report_csv(p);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  for (const auto& r : rows) {
    if (r.horizon_s != base.horizon_s)
      throw ConfigError("compare: horizon mismatch between " + r.run_id + " and " +
                        base.run_id);
    if (r.prc_pbj != base.prc_pbj || r.prc_ws != base.prc_ws)
      throw ConfigError("compare: workload tuple mismatch between " + r.run_id +
                        " and " + base.run_id);
  }

  double denom_node_hours = static_cast<double>(base.prc_pbj + base.prc_ws) *
                            static_cast<double>(base.horizon_s) / 3600.0;

  std::ofstream out(out_csv);
  if (!out) throw ConfigError("cannot write " + out_csv.string());
  out << "run_id,regime,completed_jobs,delta_completed,avg_turnaround_s,"
         "delta_turnaround_s,turnaround_delay_pct,peak_resource_nodes,peak_ratio,"
         "total_resource_node_hours,delta_total_node_hours,total_savings_pct,"
         "saved_resources_pct\n";
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.regime << ',' << r.completed_jobs << ','
        << (r.completed_jobs - base.completed_jobs) << ','
        << std::llround(r.avg_turnaround_s) << ','
        << std::llround(r.avg_turnaround_s - base.avg_turnaround_s) << ',';
    if (base.avg_turnaround_s > 0)
      out << fmt_fixed1((r.avg_turnaround_s - base.avg_turnaround_s) /
                        base.avg_turnaround_s * 100.0);
    out << ',' << r.peak_resource_nodes << ',';
    if (base.peak_resource_nodes > 0)
      out << fmt_fixed3(static_cast<double>(r.peak_resource_nodes) /
                        static_cast<double>(base.peak_resource_nodes));
    out << ',' << fmt_fixed1(r.total_resource_node_hours) << ','
        << fmt_fixed1(r.total_resource_node_hours - base.total_resource_node_hours)
        << ',';
    if (base.total_resource_node_hours > 0)
      out << fmt_fixed1((base.total_resource_node_hours - r.total_resource_node_hours) /
                        base.total_resource_node_hours * 100.0);
    out << ',';
    if (denom_node_hours > 0)
      out << fmt_fixed1((denom_node_hours - r.total_resource_node_hours) /
                        denom_node_hours * 100.0);
    out << '\n';
  }
}

}  // namespace phoenixsim
