#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gmswarm/circuit.hpp"
#include "gmswarm/pso.hpp"

namespace gmswarm {

struct BackendConfig {
  enum class Kind { surrogate, simulator };

  Kind kind = Kind::surrogate;
  std::string simulator_path = "ngspice";
  std::string template_dir;
  double timeout_s = 120.0;
  std::map<std::string, std::string> vars;

  bool operator==(const BackendConfig&) const = default;
};

/// One optimization setup. Paths are stored as written and resolved against
/// base_dir (the config file's directory) on use.
struct RunConfig {
  int schema = 1;
  std::string lut_n_type;
  std::string lut_p_type;
  TopologySpec topology;  // groups carry the allowed length sets
  PerfGoals goals;
  pso::SwarmConfig swarm;
  std::vector<pso::Range> gmid_bounds;
  pso::Range tail_current_bounds;
  BackendConfig backend;
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds;

  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;
};

/// Throws Error(Errc::invalid_config) naming the offending key path.
RunConfig parse_run_config(const nlohmann::json& j, std::filesystem::path base_dir = {});
nlohmann::json to_json(const RunConfig& cfg);

nlohmann::json load_config_json(const std::filesystem::path& path);
RunConfig load_run_config(const std::filesystem::path& path);

/// `key.path=value`; the value is taken as JSON when it parses, else as a
/// string. Missing intermediate objects are created.
void apply_override(nlohmann::json& j, std::string_view assignment);

/// Checks that referenced files exist.
void validate_paths(const RunConfig& cfg);

}  // namespace gmswarm
