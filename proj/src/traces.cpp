#include "phoenixsim/traces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

namespace phoenixsim {

namespace {

// round(v * target / old) half up, in exact integer arithmetic
int64_t scale_round(int64_t v, int64_t target, int64_t old_peak) {
  return (2 * v * target + old_peak) / (2 * old_peak);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(std::move(tok));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end != s.c_str() && *end == '\0';
}

}  // namespace

void JobTrace::recompute_derived() {
  peak_demand = 0;
  int64_t max_submit = 0;
  for (const Job& j : jobs) {
    peak_demand = std::max(peak_demand, j.nodes);
    max_submit = std::max(max_submit, j.submit_s);
  }
  duration_s = std::max(duration_s, max_submit);
}

int64_t WsDemandTrace::demand_at(int64_t time_s) const {
  // most recent sample at or before time_s
  int64_t v = 0;
  for (const auto& [t, nodes] : samples) {
    if (t > time_s) break;
    v = nodes;
  }
  return v;
}

void WsDemandTrace::recompute_derived() {
  peak_demand = 0;
  for (const auto& [t, nodes] : samples) peak_demand = std::max(peak_demand, nodes);
  if (!samples.empty()) duration_s = std::max(duration_s, samples.back().first);
}

JobTrace parse_swf(const std::filesystem::path& path, const SwfColumnMap& columns,
                   SwfParseStats* stats) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open batch trace: " + path.string());
  return parse_swf(in, columns, stats);
}

JobTrace parse_swf(std::istream& in, const SwfColumnMap& columns,
                   SwfParseStats* stats) {
  SwfParseStats local;
  JobTrace trace;
  std::string line;
  int64_t line_no = 0;
  const std::size_t min_fields =
      static_cast<std::size_t>(std::max({columns.submit, columns.runtime, columns.processors}));

  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == ';') continue;

    auto fields = split_ws(line);
    if (fields.size() < min_fields) {
      ++local.dropped;
      continue;
    }

    auto field = [&](int col_1based) -> const std::string& {
      return fields[static_cast<std::size_t>(col_1based - 1)];
    };

    double submit = 0, runtime = 0, procs = 0;
    if (!parse_double(field(columns.submit), submit) ||
        !parse_double(field(columns.runtime), runtime) ||
        !parse_double(field(columns.processors), procs)) {
      ++local.dropped;
      continue;
    }

    // missing runtime: fall back to the requested-time column when present
    if (runtime <= 0 && columns.requested_time >= 1 &&
        fields.size() >= static_cast<std::size_t>(columns.requested_time)) {
      double requested = 0;
      if (parse_double(field(columns.requested_time), requested) && requested > 0)
        runtime = requested;
    }

    if (runtime <= 0 || procs <= 0 || submit < 0) {
      ++local.dropped;
      continue;
    }

    Job job;
    job.submit_s = std::llround(submit);
    job.runtime_s = static_cast<int64_t>(std::ceil(runtime));
    job.nodes = std::llround(procs);
    double id = 0;
    job.job_id = (parse_double(fields[0], id) && id > 0) ? std::llround(id) : line_no;
    trace.jobs.push_back(job);
    ++local.parsed;
  }

  if (trace.jobs.empty()) throw TraceError("empty trace: no valid jobs parsed");

  std::stable_sort(trace.jobs.begin(), trace.jobs.end(), [](const Job& a, const Job& b) {
    return std::pair(a.submit_s, a.job_id) < std::pair(b.submit_s, b.job_id);
  });
  trace.recompute_derived();
  if (stats) *stats = local;
  return trace;
}

JobTrace extract_segment(const JobTrace& trace, int64_t start_s, int64_t length_s) {
  if (start_s < 0) throw TraceError("segment start must be >= 0");
  if (length_s <= 0) throw TraceError("segment length must be > 0");

  JobTrace out;
  out.duration_s = length_s;
  for (const Job& j : trace.jobs) {
    if (j.submit_s < start_s || j.submit_s >= start_s + length_s) continue;
    Job shifted = j;
    shifted.submit_s -= start_s;
    out.jobs.push_back(shifted);
  }
  out.recompute_derived();
  out.duration_s = length_s;
  return out;
}

JobTrace normalize_per_node_cpus(const JobTrace& trace, int64_t cpus_per_node) {
  if (cpus_per_node < 1) throw TraceError("cpus_per_node must be >= 1");
  JobTrace out = trace;
  for (Job& j : out.jobs)
    j.nodes = std::max<int64_t>(1, (j.nodes + cpus_per_node - 1) / cpus_per_node);
  out.peak_demand = 0;
  for (const Job& j : out.jobs) out.peak_demand = std::max(out.peak_demand, j.nodes);
  return out;
}

JobTrace scale_to_peak(const JobTrace& trace, int64_t target_peak) {
  if (target_peak < 1) throw TraceError("target peak must be >= 1");
  if (trace.peak_demand < 1) throw TraceError("trace peak must be >= 1");
  JobTrace out = trace;
  for (Job& j : out.jobs) {
    int64_t scaled = scale_round(j.nodes, target_peak, trace.peak_demand);
    j.nodes = std::clamp<int64_t>(scaled, 1, target_peak);
  }
  out.peak_demand = 0;
  for (const Job& j : out.jobs) out.peak_demand = std::max(out.peak_demand, j.nodes);
  return out;
}

WsDemandTrace scale_to_peak(const WsDemandTrace& trace, int64_t target_peak) {
  if (target_peak < 1) throw TraceError("target peak must be >= 1");
  if (trace.peak_demand < 1) throw TraceError("trace peak must be >= 1");
  WsDemandTrace out = trace;
  for (auto& [t, nodes] : out.samples) {
    if (nodes <= 0) continue;  // zero demand stays zero
    int64_t scaled = scale_round(nodes, target_peak, trace.peak_demand);
    nodes = std::clamp<int64_t>(scaled, 1, target_peak);
  }
  out.peak_demand = 0;
  for (const auto& [t, nodes] : out.samples)
    out.peak_demand = std::max(out.peak_demand, nodes);
  return out;
}

int autoscale_decision(double mean_util, int64_t instances, double util_threshold) {
  if (mean_util > util_threshold) return +1;
  if (instances > 1 &&
      mean_util < util_threshold * static_cast<double>(instances - 1) /
                      static_cast<double>(instances))
    return -1;
  return 0;
}

WsDemandTrace autoscale_to_demand(std::span<const RatePoint> rates,
                                  const AutoscalerParams& params,
                                  int64_t sample_period_s) {
  if (rates.empty() || rates.front().time_s != 0)
    throw TraceError("rate series must start at time 0");
  for (std::size_t i = 1; i < rates.size(); ++i)
    if (rates[i].time_s <= rates[i - 1].time_s)
      throw TraceError("rate series times must be strictly increasing");
  if (sample_period_s < 1) throw TraceError("sample period must be >= 1");
  if (params.util_threshold <= 0 || params.util_threshold >= 1 ||
      params.window_s < 1 || params.initial_instances < 1 ||
      params.capacity_per_instance <= 0)
    throw TraceError("invalid autoscaler params");

  const int64_t duration = rates.back().time_s;
  int64_t n = params.initial_instances;

  WsDemandTrace out;
  out.duration_s = duration;
  out.samples.emplace_back(0, n);

  std::deque<double> window;  // per-second utilization, oldest at front
  std::size_t rate_idx = 0;

  for (int64_t t = 0; t < duration; ++t) {
    while (rate_idx + 1 < rates.size() && rates[rate_idx + 1].time_s <= t) ++rate_idx;
    double util = rates[rate_idx].requests_per_s /
                  (static_cast<double>(n) * params.capacity_per_instance);
    util = std::min(util, 1.0);
    window.push_back(util);
    if (static_cast<int64_t>(window.size()) > params.window_s) window.pop_front();

    int64_t tick = t + 1;
    if (tick % sample_period_s != 0) continue;
    double sum = 0;
    for (double u : window) sum += u;
    double mean = sum / static_cast<double>(window.size());
    int step = autoscale_decision(mean, n, params.util_threshold);
    if (step != 0) {
      n += step;
      out.samples.emplace_back(tick, n);
    }
  }

  out.recompute_derived();
  return out;
}

WsDemandTrace synth_bursty_ws(int64_t duration_s, int64_t base_nodes,
                              int64_t peak_nodes,
                              std::span<const std::pair<int64_t, int64_t>> burst_windows,
                              uint64_t seed) {
  if (base_nodes < 1) throw TraceError("base_nodes must be >= 1");
  if (peak_nodes < base_nodes) throw TraceError("peak_nodes must be >= base_nodes");
  if (duration_s < 1) throw TraceError("duration must be >= 1");

  std::vector<std::pair<int64_t, int64_t>> windows(burst_windows.begin(),
                                                   burst_windows.end());
  std::sort(windows.begin(), windows.end());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& [s, e] = windows[i];
    if (s < 0 || e <= s || e > duration_s)
      throw TraceError("burst window outside [0, duration)");
    if (i > 0 && s < windows[i - 1].second)
      throw TraceError("burst windows overlap");
  }

  constexpr int64_t kStep = 60;
  std::mt19937_64 rng(seed);

  std::vector<int64_t> values;
  std::vector<int64_t> times;
  std::size_t w = 0;
  for (int64_t t = 0; t < duration_s; t += kStep) {
    while (w < windows.size() && t >= windows[w].second) ++w;
    int64_t v = base_nodes;
    if (w < windows.size() && t >= windows[w].first) {
      const auto& [s, e] = windows[w];
      int64_t mid = (s + e) / 2;
      double frac = (t <= mid) ? static_cast<double>(t - s) / std::max<int64_t>(1, mid - s)
                               : static_cast<double>(e - t) / std::max<int64_t>(1, e - mid);
      double ramp = static_cast<double>(peak_nodes - base_nodes) * frac;
      // seeded wobble on the ramp, a few percent, never past the peak
      double wobble = (static_cast<double>(rng() % 1000) / 1000.0 - 0.5) * 0.04 * ramp;
      v = base_nodes + std::llround(ramp + wobble);
      v = std::clamp(v, base_nodes, peak_nodes);
    }
    times.push_back(t);
    values.push_back(v);
  }

  // force each window's apex to hit the peak exactly
  for (const auto& [s, e] : windows) {
    int64_t mid = (s + e) / 2;
    std::size_t idx = static_cast<std::size_t>(std::min<int64_t>(
        (times.size() - 1), std::max<int64_t>(0, mid / kStep)));
    if (times[idx] >= s && times[idx] < e) values[idx] = peak_nodes;
  }

  WsDemandTrace out;
  out.duration_s = duration_s;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!out.samples.empty() && out.samples.back().second == values[i]) continue;
    out.samples.emplace_back(times[i], values[i]);
  }
  out.recompute_derived();
  out.duration_s = duration_s;
  return out;
}

WsDemandTrace load_ws_demand_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open WS demand trace: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw TraceError("empty WS demand file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time_s,nodes")
    throw TraceError("WS demand CSV must start with header 'time_s,nodes'");

  WsDemandTrace out;
  int64_t prev_t = -1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw TraceError("malformed WS demand row: " + line);
    int64_t t = std::stoll(line.substr(0, comma));
    int64_t nodes = std::stoll(line.substr(comma + 1));
    if (t <= prev_t) throw TraceError("WS demand times must be strictly increasing");
    if (nodes < 0) throw TraceError("WS demand must be >= 0");
    prev_t = t;
    out.samples.emplace_back(t, nodes);
  }
  if (out.samples.empty() || out.samples.front().first != 0)
    throw TraceError("WS demand trace must have its first sample at time 0");
  out.recompute_derived();
  return out;
}

void save_ws_demand_csv(const WsDemandTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw TraceError("cannot write WS demand trace: " + path.string());
  out << "time_s,nodes\n";
  for (const auto& [t, nodes] : trace.samples) out << t << ',' << nodes << '\n';
  // sentinel row so the horizon round-trips
  if (!trace.samples.empty() && trace.duration_s > trace.samples.back().first)
    out << trace.duration_s << ',' << trace.samples.back().second << '\n';
}

std::vector<RatePoint> load_rate_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open rate series: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw TraceError("empty rate series file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time_s,requests_per_s")
    throw TraceError("rate CSV must start with header 'time_s,requests_per_s'");

  std::vector<RatePoint> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw TraceError("malformed rate row: " + line);
    RatePoint p;
    p.time_s = std::stoll(line.substr(0, comma));
    p.requests_per_s = std::stod(line.substr(comma + 1));
    if (!out.empty() && p.time_s <= out.back().time_s)
      throw TraceError("rate series times must be strictly increasing");
    out.push_back(p);
  }
  if (out.empty()) throw TraceError("rate series has no rows");
  return out;
}

}  // namespace phoenixsim
