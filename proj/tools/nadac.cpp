// nadac: run, sweep, dare, validate.
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nadac/commands.hpp"
#include "nadac/io.hpp"

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online identification and adaptive control simulator"};
  app.set_version_flag("--version", nadac::build_version());
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "simulate one configuration (or re-run a manifest)");
  run->add_option("config", config_path, "run config or manifest JSON")->required();
  run->add_option("--out", out_dir, "output directory (overrides $NADAC_OUT and the config)");

  std::string axis;
  std::string values;
  std::string seeds;
  unsigned jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "run a parameter x seed grid concurrently");
  sweep->add_option("config", config_path, "base run config")->required();
  sweep->add_option("--axis", axis, "dotted path of a scalar field, e.g. noise.sigma")->required();
  sweep->add_option("--values", values, "comma-separated axis values")->required();
  sweep->add_option("--seeds", seeds, "comma-separated seeds (default: the config seed)");
  sweep->add_option("--jobs", jobs, "worker threads (default: logical cores)");
  sweep->add_option("--out", out_dir, "output root");

  std::string matrix_path;
  auto* dare = app.add_subcommand("dare", "solve the Riccati equation for a JSON {A, Q, R}");
  dare->add_option("matrices", matrix_path, "JSON file")->required();

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_path, "run config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nadac::kExitValidation;
  }

  const std::optional<std::string> out = out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir);
  if (*run) return nadac::cmd_run(config_path, out, std::cout, std::cerr);
  if (*sweep) {
    nadac::SweepSpec spec;
    spec.axis = axis;
    spec.jobs = jobs;
    try {
      spec.values = parse_list(values);
      for (double s : parse_list(seeds)) spec.seeds.push_back(static_cast<std::uint64_t>(s));
    } catch (const std::exception&) {
      std::cerr << "validation error: --values and --seeds take comma-separated numbers\n";
      return nadac::kExitValidation;
    }
    return nadac::cmd_sweep(config_path, spec, out, std::cout, std::cerr);
  }
  if (*dare) return nadac::cmd_dare(matrix_path, std::cout, std::cerr);
  if (*validate) return nadac::cmd_validate(config_path, std::cout, std::cerr);
  return nadac::kExitValidation;
}
