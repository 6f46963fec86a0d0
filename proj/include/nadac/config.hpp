#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "nadac/simulate.hpp"

namespace nadac {

/// A validated run configuration together with the JSON it came from.
struct RunConfig {
  nlohmann::json raw;  // echoed verbatim into the manifest
  std::string description;
  std::string output_dir = "nadac_out";
  SimulationConfig sim;
  bool rate_probes = false;
  std::optional<double> eta;  // resolved when rate probes are on
};

/// Builds and validates a configuration. A manifest (an object with a
/// "config" member and no "plant") is accepted and unwrapped. Errors are
/// ValidationError with a dotted field path.
RunConfig parse_config(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
RunConfig load_config(const std::string& path);

/// Parses a matrix given as an array of equal-length rows.
Matrix json_to_matrix(const nlohmann::json& j, const std::string& path);
Vector json_to_vector(const nlohmann::json& j, const std::string& path);
nlohmann::json matrix_to_json(const Matrix& m);

/// Built-in plant presets: "opinion_dynamics" and "epidemic_si".
nlohmann::json plant_preset(const std::string& name, const std::string& path);

/// Looks up a dotted path ("noise.sigma") in a config object.
const nlohmann::json* find_path(const nlohmann::json& j, const std::string& dotted);
/// Overwrites a scalar at a dotted path; throws ValidationError if it is
/// absent or not a number.
void set_scalar_path(nlohmann::json& j, const std::string& dotted, double value);

}  // namespace nadac
