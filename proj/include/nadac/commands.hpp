#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace nadac {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitRuntime = 3,
  kExitPartialSweep = 4,
};

/// Output directory precedence: explicit override, then $NADAC_OUT, then the config's output_dir.
std::string resolve_output_dir(const std::optional<std::string>& override_dir, const std::string& config_dir);

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir, std::ostream& out,
            std::ostream& err);

struct SweepSpec {
  std::string axis;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;  // empty: the config's own seed
  unsigned jobs = 0;                 // 0: hardware concurrency
};

int cmd_sweep(const std::string& config_path, const SweepSpec& spec, const std::optional<std::string>& out_dir,
              std::ostream& out, std::ostream& err);

int cmd_dare(const std::string& matrix_path, std::ostream& out, std::ostream& err);

int cmd_validate(const std::string& config_path, std::ostream& out, std::ostream& err);

}  // namespace nadac
