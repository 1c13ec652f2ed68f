#include "gmswarm/config.hpp"

#include <algorithm>

#include "gmswarm/error.hpp"
#include "gmswarm/text.hpp"

namespace gmswarm {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(Errc::invalid_config, key + ": " + what);
}

const json& at(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) fail(path.empty() ? key : path + "." + key, "missing key");
  return j.at(key);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double num(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  return v.get<double>();
}

std::size_t count(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    fail(join(path, key), "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string str(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_string()) fail(join(path, key), "expected a string");
  return v.get<std::string>();
}

bool boolean(const json& j, const std::string& key, const std::string& path) {
  const json& v = at(j, key, path);
  if (!v.is_boolean()) fail(join(path, key), "expected true or false");
  return v.get<bool>();
}

pso::Range range(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    fail(path, "expected [lower, upper]");
  }
  pso::Range r{v[0].get<double>(), v[1].get<double>()};
  if (!(r.lo < r.hi)) fail(path, "lower must be < upper");
  return r;
}

std::optional<double> goal(const json& goals, const char* key) {
  if (!goals.contains(key) || goals.at(key).is_null()) return std::nullopt;
  if (!goals.at(key).is_number()) fail(std::string("goals.") + key, "expected a number or null");
  return goals.at(key).get<double>();
}

json goal_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::size_t group_index(const TopologySpec& t, const json& name, const std::string& path) {
  if (!name.is_string()) fail(path, "expected a group name");
  const auto s = name.get<std::string>();
  for (std::size_t i = 0; i < t.groups.size(); ++i) {
    if (t.groups[i].name == s) return i;
  }
  fail(path, "unknown group '" + s + "'");
}

json group_name(const TopologySpec& t, std::optional<std::size_t> i) {
  return i ? json(t.groups.at(*i).name) : json(nullptr);
}

}  // namespace

std::filesystem::path RunConfig::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

RunConfig parse_run_config(const json& j, std::filesystem::path base_dir) {
  RunConfig c;
  c.base_dir = std::move(base_dir);
  if (!j.is_object()) fail("<root>", "expected an object");

  const json& schema = at(j, "schema", "");
  if (!schema.is_number_integer() || schema.get<int>() != 1) fail("schema", "only schema=1 is supported");
  c.schema = 1;

  const json& luts = at(j, "luts", "");
  c.lut_n_type = str(luts, "n_type", "luts");
  c.lut_p_type = str(luts, "p_type", "luts");

  const json& topo = at(j, "topology", "");
  TopologySpec& t = c.topology;
  t.supply_voltage_v = num(topo, "supply_voltage_v", "topology");
  t.load_capacitance_pf = num(topo, "load_capacitance_pf", "topology");
  t.total_current_ratio = num(topo, "total_current_ratio", "topology");
  t.slew_ratio = num(topo, "slew_ratio", "topology");
  t.nondominant_pole_factor = num(topo, "nondominant_pole_factor", "topology");
  const auto weighting = str(topo, "area_weighting", "topology");
  if (weighting == "multiplicity") {
    t.area_weighting = AreaWeighting::multiplicity;
  } else if (weighting == "unit") {
    t.area_weighting = AreaWeighting::unit;
  } else {
    fail("topology.area_weighting", "expected 'multiplicity' or 'unit'");
  }
  const json& groups = at(topo, "groups", "topology");
  if (!groups.is_array() || groups.empty()) fail("topology.groups", "expected a non-empty array");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const std::string p = "topology.groups[" + std::to_string(i) + "]";
    DeviceGroup g;
    g.name = str(groups[i], "name", p);
    auto kind = parse_device_kind(str(groups[i], "device_kind", p));
    if (!kind) fail(p + ".device_kind", "expected n_type or p_type");
    g.kind = *kind;
    g.multiplicity = static_cast<int>(count(groups[i], "multiplicity", p));
    g.current_ratio = num(groups[i], "current_ratio", p);
    t.groups.push_back(std::move(g));
  }
  t.input_group = group_index(t, at(topo, "input_group", "topology"), "topology.input_group");
  const json& tail = at(topo, "tail_group", "topology");
  if (!tail.is_null()) t.tail_group = group_index(t, tail, "topology.tail_group");
  const json& stacks = at(topo, "stacks", "topology");
  if (!stacks.is_array()) fail("topology.stacks", "expected an array");
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const std::string p = "topology.stacks[" + std::to_string(i) + "]";
    OutputStack s;
    const json& casc = at(stacks[i], "cascode", p);
    if (!casc.is_null()) s.cascode = group_index(t, casc, p + ".cascode");
    s.load = group_index(t, at(stacks[i], "load", p), p + ".load");
    t.stacks.push_back(s);
  }
  const json& poles = at(topo, "pole_groups", "topology");
  if (!poles.is_array()) fail("topology.pole_groups", "expected an array");
  for (const auto& name : poles) t.pole_groups.push_back(group_index(t, name, "topology.pole_groups"));

  const json& lengths = at(j, "lengths", "");
  if (!lengths.is_array() || lengths.size() != t.groups.size()) {
    fail("lengths", "expected one length list per group");
  }
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const std::string p = "lengths[" + std::to_string(i) + "]";
    if (!lengths[i].is_array() || lengths[i].empty()) fail(p, "expected a non-empty array");
    for (const auto& l : lengths[i]) {
      if (!l.is_number() || !(l.get<double>() > 0.0)) fail(p, "lengths must be positive numbers");
      t.groups[i].allowed_lengths_um.push_back(l.get<double>());
    }
  }
  try {
    t.validate();
  } catch (const Error& e) {
    throw Error(Errc::invalid_config, std::string("topology: ") + e.what());
  }

  const json& goals = at(j, "goals", "");
  if (!goals.is_object()) fail("goals", "expected an object");
  c.goals.min_av0_db = goal(goals, "min_av0_db");
  c.goals.min_gbw_hz = goal(goals, "min_gbw_hz");
  c.goals.min_pm_deg = goal(goals, "min_pm_deg");
  c.goals.min_sr_v_per_us = goal(goals, "min_sr_v_per_us");
  c.goals.min_cmrr_db = goal(goals, "min_cmrr_db");
  c.goals.min_psrr_db = goal(goals, "min_psrr_db");
  c.goals.max_power_uw = goal(goals, "max_power_uw");

  const json& sw = at(j, "swarm", "");
  pso::SwarmConfig& s = c.swarm;
  s.population = count(sw, "population", "swarm");
  s.iterations = count(sw, "iterations", "swarm");
  s.inertia = num(sw, "inertia", "swarm");
  s.c1_max = num(sw, "c1_max", "swarm");
  s.c1_min = num(sw, "c1_min", "swarm");
  s.c2_max = num(sw, "c2_max", "swarm");
  s.c2_min = num(sw, "c2_min", "swarm");
  s.shrink_margin = num(sw, "delta", "swarm");
  s.recovery_limit = count(sw, "m_max", "swarm");
  s.history_weight = num(sw, "alpha", "swarm");
  s.init_attempts_per_slot = count(sw, "init_attempts_per_slot", "swarm");
  s.per_dimension_random = boolean(sw, "per_dimension_random", "swarm");
  s.parallel_eval = boolean(sw, "parallel_eval", "swarm");
  try {
    s.validate();
  } catch (const Error& e) {
    throw Error(Errc::invalid_config, e.what());
  }

  const json& bounds = at(j, "bounds", "");
  const json& gmid = at(bounds, "gmid", "bounds");
  if (!gmid.is_array() || gmid.size() != t.groups.size()) {
    fail("bounds.gmid", "expected one [lower, upper] per group");
  }
  for (std::size_t i = 0; i < gmid.size(); ++i) {
    c.gmid_bounds.push_back(range(gmid[i], "bounds.gmid[" + std::to_string(i) + "]"));
  }
  c.tail_current_bounds = range(at(bounds, "tail_current_uA", "bounds"), "bounds.tail_current_uA");
  if (!(c.tail_current_bounds.lo > 0.0)) fail("bounds.tail_current_uA", "lower must be > 0");

  const json& be = at(j, "backend", "");
  const auto kind = str(be, "kind", "backend");
  if (kind == "surrogate") {
    c.backend.kind = BackendConfig::Kind::surrogate;
  } else if (kind == "simulator") {
    c.backend.kind = BackendConfig::Kind::simulator;
  } else {
    fail("backend.kind", "expected 'surrogate' or 'simulator'");
  }
  c.backend.simulator_path = str(at(be, "simulator", "backend"), "path", "backend.simulator");
  c.backend.template_dir = str(be, "template_dir", "backend");
  c.backend.timeout_s = num(be, "timeout_s", "backend");
  if (!(c.backend.timeout_s > 0.0)) fail("backend.timeout_s", "must be > 0");
  const json& vars = at(be, "vars", "backend");
  if (!vars.is_object()) fail("backend.vars", "expected an object");
  for (const auto& [k, v] : vars.items()) {
    if (!v.is_string()) fail("backend.vars." + k, "expected a string");
    c.backend.vars[k] = v.get<std::string>();
  }

  c.output_dir = str(j, "output_dir", "");
  const json& seeds = at(j, "seeds", "");
  if (!seeds.is_array() || seeds.empty()) fail("seeds", "expected a non-empty array");
  for (const auto& sd : seeds) {
    if (!sd.is_number_unsigned()) fail("seeds", "seeds must be non-negative integers");
    c.seeds.push_back(sd.get<std::uint64_t>());
  }
  return c;
}

json to_json(const RunConfig& c) {
  const TopologySpec& t = c.topology;
  json groups = json::array();
  json lengths = json::array();
  for (const auto& g : t.groups) {
    groups.push_back({{"name", g.name},
                      {"device_kind", std::string(to_string(g.kind))},
                      {"multiplicity", g.multiplicity},
                      {"current_ratio", g.current_ratio}});
    lengths.push_back(g.allowed_lengths_um);
  }
  json stacks = json::array();
  for (const auto& s : t.stacks) {
    stacks.push_back({{"cascode", group_name(t, s.cascode)}, {"load", group_name(t, s.load)}});
  }
  json poles = json::array();
  for (auto p : t.pole_groups) poles.push_back(t.groups.at(p).name);

  json gmid = json::array();
  for (const auto& r : c.gmid_bounds) gmid.push_back({r.lo, r.hi});

  const pso::SwarmConfig& s = c.swarm;
  json vars = json::object();
  for (const auto& [k, v] : c.backend.vars) vars[k] = v;

  return {
      {"schema", c.schema},
      {"luts", {{"n_type", c.lut_n_type}, {"p_type", c.lut_p_type}}},
      {"topology",
       {{"supply_voltage_v", t.supply_voltage_v},
        {"load_capacitance_pf", t.load_capacitance_pf},
        {"total_current_ratio", t.total_current_ratio},
        {"slew_ratio", t.slew_ratio},
        {"nondominant_pole_factor", t.nondominant_pole_factor},
        {"area_weighting", t.area_weighting == AreaWeighting::multiplicity ? "multiplicity" : "unit"},
        {"groups", groups},
        {"input_group", group_name(t, t.input_group)},
        {"tail_group", group_name(t, t.tail_group)},
        {"stacks", stacks},
        {"pole_groups", poles}}},
      {"lengths", lengths},
      {"goals",
       {{"min_av0_db", goal_json(c.goals.min_av0_db)},
        {"min_gbw_hz", goal_json(c.goals.min_gbw_hz)},
        {"min_pm_deg", goal_json(c.goals.min_pm_deg)},
        {"min_sr_v_per_us", goal_json(c.goals.min_sr_v_per_us)},
        {"min_cmrr_db", goal_json(c.goals.min_cmrr_db)},
        {"min_psrr_db", goal_json(c.goals.min_psrr_db)},
        {"max_power_uw", goal_json(c.goals.max_power_uw)}}},
      {"swarm",
       {{"population", s.population},
        {"iterations", s.iterations},
        {"inertia", s.inertia},
        {"c1_max", s.c1_max},
        {"c1_min", s.c1_min},
        {"c2_max", s.c2_max},
        {"c2_min", s.c2_min},
        {"delta", s.shrink_margin},
        {"m_max", s.recovery_limit},
        {"alpha", s.history_weight},
        {"init_attempts_per_slot", s.init_attempts_per_slot},
        {"per_dimension_random", s.per_dimension_random},
        {"parallel_eval", s.parallel_eval}}},
      {"bounds",
       {{"gmid", gmid},
        {"tail_current_uA", {c.tail_current_bounds.lo, c.tail_current_bounds.hi}}}},
      {"backend",
       {{"kind", c.backend.kind == BackendConfig::Kind::surrogate ? "surrogate" : "simulator"},
        {"simulator", {{"path", c.backend.simulator_path}}},
        {"template_dir", c.backend.template_dir},
        {"timeout_s", c.backend.timeout_s},
        {"vars", vars}}},
      {"output_dir", c.output_dir},
      {"seeds", c.seeds},
  };
}

json load_config_json(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::invalid_config, e.what());
  }
  try {
    return json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(Errc::invalid_config, path.string() + ": " + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(load_config_json(path), path.parent_path());
}

void apply_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(Errc::invalid_config, "override '" + std::string(assignment) + "' is not key=value");
  }
  const auto key = std::string(trim(assignment.substr(0, eq)));
  const auto raw = std::string(trim(assignment.substr(eq + 1)));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &j;
  auto parts = split(key, '.');
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string part(parts[i]);
    if (part.empty()) throw Error(Errc::invalid_config, "empty segment in override key " + key);
    if (!node->is_object()) {
      throw Error(Errc::invalid_config, "override key " + key + " crosses a non-object");
    }
    if (i + 1 == parts.size()) {
      (*node)[part] = value;
    } else {
      node = &(*node)[part];
      if (node->is_null()) *node = json::object();
    }
  }
}

void validate_paths(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  auto need_file = [&](const std::string& key, const std::string& p) {
    if (!fs::is_regular_file(cfg.resolve(p))) fail(key, "file not found: " + cfg.resolve(p).string());
  };
  need_file("luts.n_type", cfg.lut_n_type);
  need_file("luts.p_type", cfg.lut_p_type);
  if (cfg.backend.kind == BackendConfig::Kind::simulator &&
      !fs::is_directory(cfg.resolve(cfg.backend.template_dir))) {
    fail("backend.template_dir", "directory not found: " + cfg.resolve(cfg.backend.template_dir).string());
  }
}

}  // namespace gmswarm
