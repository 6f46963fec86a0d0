#pragma once

#include <string>

#include "nadac/config.hpp"

namespace support {

inline std::string preset_path(const std::string& name) {
  return std::string(NADAC_SOURCE_DIR) + "/presets/" + name + ".json";
}

/// Loads a shipped preset, optionally overriding the horizon and seed.
inline nadac::RunConfig load_preset(const std::string& name, std::uint64_t horizon = 0, std::uint64_t seed = 0,
                                    bool override_seed = false) {
  auto j = nadac::read_json_file(preset_path(name));
  if (horizon != 0) j["horizon"] = horizon;
  if (override_seed) j["seed"] = seed;
  return nadac::parse_config(j);
}

}  // namespace support
