#include "phoenixsim/re_spec.hpp"

#include <fstream>
#include <set>

namespace phoenixsim {

namespace {

template <typename T>
T enum_from_string(const std::string& s, const char* field,
                   std::initializer_list<std::pair<const char*, T>> table) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw std::runtime_error(std::string("re_spec: invalid value '") + s + "' for " + field);
}

}  // namespace

const char* to_string(CoordinationModel m) {
  switch (m) {
    case CoordinationModel::fb: return "FB";
    case CoordinationModel::flb_nub: return "FLB_NUB";
    case CoordinationModel::none: return "none";
  }
  return "?";
}

const char* to_string(WorkloadType w) {
  return w == WorkloadType::parallel_batch_jobs ? "parallel_batch_jobs" : "web_service";
}

std::vector<Violation> validate(const RuntimeEnvSpec& spec) {
  std::vector<Violation> out;
  if (spec.lower_bound < 0)
    out.push_back({"lower_bound", "must be >= 0"});
  if (spec.setup_latency_s < 0)
    out.push_back({"setup_latency_s", "must be >= 0"});
  if (spec.upper_bound && *spec.upper_bound < spec.lower_bound)
    out.push_back({"upper_bound", "must be >= lower_bound"});

  switch (spec.coordination_model) {
    case CoordinationModel::fb:
      if (!spec.upper_bound)
        out.push_back({"upper_bound", "FB requires a defined upper bound"});
      else if (*spec.upper_bound != spec.lower_bound)
        out.push_back({"upper_bound", "FB requires upper_bound == lower_bound"});
      break;
    case CoordinationModel::flb_nub:
      if (spec.upper_bound)
        out.push_back({"upper_bound", "FLB_NUB requires an undefined upper bound"});
      break;
    case CoordinationModel::none:
      break;
  }
  return out;
}

namespace {

bool pairable(const RuntimeEnvSpec& a, const RuntimeEnvSpec& b) {
  if (a.coordination_model == CoordinationModel::none ||
      a.coordination_model != b.coordination_model)
    return false;
  bool same_ok = a.allow_coordination_same_provider && b.allow_coordination_same_provider;
  bool other_ok = a.allow_coordination_other_provider && b.allow_coordination_other_provider;
  return same_ok || other_ok;
}

}  // namespace

PairOutcome pair(std::span<const RuntimeEnvSpec> specs, int64_t pool_b) {
  PairOutcome out;
  std::optional<std::size_t> pbj_i, ws_i;

  // first-fit over declaration order
  for (std::size_t i = 0; i < specs.size() && !out.group; ++i) {
    if (specs[i].workload_type != WorkloadType::parallel_batch_jobs) continue;
    for (std::size_t j = 0; j < specs.size(); ++j) {
      if (specs[j].workload_type != WorkloadType::web_service) continue;
      if (!pairable(specs[i], specs[j])) continue;
      CoordinationGroup g;
      g.pbj_spec = specs[i];
      g.ws_spec = specs[j];
      g.coordinated_pool_b = specs[i].coordination_model == CoordinationModel::fb
                                 ? specs[i].lower_bound + specs[j].lower_bound
                                 : pool_b;
      out.group = g;
      pbj_i = i;
      ws_i = j;
      break;
    }
  }

  for (std::size_t k = 0; k < specs.size(); ++k)
    if (k != pbj_i && k != ws_i) out.unpaired.push_back(k);
  return out;
}

RuntimeEnvSpec re_spec_from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known = {
      "provider_relationship",
      "workload_type",
      "granularity",
      "allow_coordination_same_provider",
      "allow_coordination_other_provider",
      "lower_bound",
      "upper_bound",
      "coordination_model",
      "setup_latency_s",
  };
  if (!doc.is_object()) throw std::runtime_error("re_spec: document must be an object");
  for (const auto& [key, value] : doc.items())
    if (!known.count(key))
      throw std::runtime_error("re_spec: unknown key '" + key + "'");

  RuntimeEnvSpec spec;
  if (doc.contains("provider_relationship"))
    spec.provider_relationship = enum_from_string<ProviderRelationship>(
        doc.at("provider_relationship").get<std::string>(), "provider_relationship",
        {{"same", ProviderRelationship::same},
         {"affiliated", ProviderRelationship::affiliated},
         {"business", ProviderRelationship::business}});
  spec.workload_type = enum_from_string<WorkloadType>(
      doc.at("workload_type").get<std::string>(), "workload_type",
      {{"parallel_batch_jobs", WorkloadType::parallel_batch_jobs},
       {"web_service", WorkloadType::web_service}});
  if (doc.contains("granularity"))
    spec.granularity = enum_from_string<Granularity>(
        doc.at("granularity").get<std::string>(), "granularity",
        {{"node", Granularity::node},
         {"virtual_machine", Granularity::virtual_machine}});
  if (doc.contains("allow_coordination_same_provider"))
    spec.allow_coordination_same_provider =
        doc.at("allow_coordination_same_provider").get<bool>();
  if (doc.contains("allow_coordination_other_provider"))
    spec.allow_coordination_other_provider =
        doc.at("allow_coordination_other_provider").get<bool>();
  spec.lower_bound = doc.at("lower_bound").get<int64_t>();
  if (doc.contains("upper_bound")) {
    const auto& ub = doc.at("upper_bound");
    if (ub.is_string()) {
      if (ub.get<std::string>() != "undefined")
        throw std::runtime_error("re_spec: upper_bound must be a number or \"undefined\"");
    } else {
      spec.upper_bound = ub.get<int64_t>();
    }
  }
  spec.coordination_model = enum_from_string<CoordinationModel>(
      doc.at("coordination_model").get<std::string>(), "coordination_model",
      {{"FB", CoordinationModel::fb},
       {"FLB_NUB", CoordinationModel::flb_nub},
       {"none", CoordinationModel::none}});
  if (doc.contains("setup_latency_s"))
    spec.setup_latency_s = doc.at("setup_latency_s").get<int64_t>();
  return spec;
}

RuntimeEnvSpec load_re_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("re_spec: cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("re_spec: " + path.string() + ": " + e.what());
  }
  return re_spec_from_json(doc);
}

}  // namespace phoenixsim
