#pragma once

#include "carnot/coupling.hpp"
#include "carnot/group.hpp"
#include "carnot/homogeneous.hpp"

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace carnot {

// Bad configuration: unknown key, wrong type, violated constraint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Target { Global, Fiber, Line };
const char* to_string(Target t);

struct HomogeneousSetup {
  std::vector<Matrix> c;
  HomogeneousElement start;
  HomogeneousElement start_tilde;
};

struct ExitParams {
  double alpha = 1.0;
  double gamma = 1.0;
  int refinements = 2;
};

struct GradientParams {
  std::string function = "cos_x1";
  std::string direction = "both";  // horizontal | vertical | both
  double epsilon = 0.05;
  std::vector<double> times{1.0, 4.0};
  std::size_t coupled_replicas = 2000;
};

struct AreaParams {
  std::vector<double> truncations{1.0, 4.0, 16.0, 64.0};
};

struct TvParams {
  int bins = 20;
  int permutations = 5;
};

struct SimulateParams {
  double T = 1.0;
  std::size_t paths = 4;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string name;
  std::string kind;
  int n = 2;
  int m = 0;
  std::uint64_t seed = 1;
  std::size_t replicas = 10000;
  double h = 1e-3;
  std::vector<double> t_grid;
  GroupElement start;
  GroupElement start_tilde;
  std::optional<HomogeneousSetup> homogeneous;
  Fidelity mode = Fidelity::Event;
  Target target = Target::Global;
  bool block_diagonalize = true;
  double horizon = std::numeric_limits<double>::infinity();
  int max_blocks = 64;
  ExitParams exit;
  GradientParams gradient;
  AreaParams areas;
  TvParams tv;
  SimulateParams simulate;

  CouplingOptions coupling_options() const;
};

const std::vector<std::string>& experiment_kinds();

// Strict: unknown keys, wrong types and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

// "a.b=value": value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

nlohmann::json element_to_json(const GroupElement& g);

}  // namespace carnot
