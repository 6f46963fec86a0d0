#include "nadac/commands.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "nadac/config.hpp"
#include "nadac/control.hpp"
#include "nadac/errors.hpp"
#include "nadac/io.hpp"
#include "nadac/metrics.hpp"

namespace nadac {
namespace fs = std::filesystem;

namespace {

nlohmann::json rate_probe_report(const RunConfig& cfg, const RunRecord& record) {
  const SimulationConfig& sim = cfg.sim;
  std::vector<double> series;
  for (const StepRow& row : record.rows) {
    if (row.t < 10 || row.t % sim.eig_stride != 0) continue;
    if (sim.mode == RunMode::kClosedLoop) {
      series.push_back(
          closed_loop_rate_probe(row.param_err, static_cast<double>(row.t), sim.probe.decay_b, *cfg.eta, sim.delta));
    } else {
      series.push_back(open_loop_rate_probe(row.param_err, row.lambda, row.log_r, sim.delta));
    }
  }
  nlohmann::json report = {{"points", series.size()}};
  if (series.size() >= 2) {
    report["plateau_1_5"] = plateaus(series, 1.5);
    report["first_half_median"] = median({series.begin(), series.begin() + static_cast<long>(series.size() / 2)});
    report["last_half_median"] = median({series.begin() + static_cast<long>(series.size() / 2), series.end()});
  }
  return report;
}

struct RunOutcome {
  int code = kExitOk;
  std::string message;
  RunSummary summary;
};

RunOutcome execute(const RunConfig& cfg, const std::string& dir) {
  RunOutcome outcome;
  fs::create_directories(dir);
  const std::string csv = (fs::path(dir) / "run.csv").string();
  const std::string manifest = (fs::path(dir) / "manifest.json").string();
  try {
    RunRecord record = run(cfg.sim);
    write_csv_file(record, csv);
    nlohmann::json man = make_manifest(cfg, record);
    man["status"] = "ok";
    if (cfg.rate_probes) man["rate_probe"] = rate_probe_report(cfg, record);
    write_json_file(man, manifest);
    outcome.summary = record.summary;
  } catch (const RunAbort& e) {
    const auto& partial = e.partial_record();
    if (partial) {
      write_csv_file(*partial, csv);
      nlohmann::json man = make_manifest(cfg, *partial);
      man["status"] = "aborted";
      man["abort_step"] = e.step();
      write_json_file(man, manifest);
      outcome.summary = partial->summary;
    }
    outcome.code = kExitRuntime;
    outcome.message = e.what();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    outcome.code = kExitRuntime;
    outcome.message = e.what();
  }
  return outcome;
}

std::string summary_line(const RunSummary& s) {
  return "param_err=" + format_double(s.final_param_err) + " J=" + format_double(s.final_tracking) +
         " projections=" + std::to_string(s.projection_count) + " wall=" + format_double(s.wall_time_s) + "s";
}

std::string axis_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string resolve_output_dir(const std::optional<std::string>& override_dir, const std::string& config_dir) {
  if (override_dir) return *override_dir;
  if (const char* env = std::getenv("NADAC_OUT"); env != nullptr && *env != '\0') return env;
  return config_dir;
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir, std::ostream& out,
            std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }
  const std::string dir = resolve_output_dir(out_dir, cfg.output_dir);
  RunOutcome outcome;
  try {
    outcome = execute(cfg, dir);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  if (outcome.code != kExitOk) {
    err << "run aborted: " << outcome.message << " (partial record in " << dir << ")\n";
    return outcome.code;
  }
  out << summary_line(outcome.summary) << '\n';
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const SweepSpec& spec, const std::optional<std::string>& out_dir,
              std::ostream& out, std::ostream& err) {
  nlohmann::json base;
  RunConfig base_cfg;
  try {
    base = read_json_file(config_path);
    if (base.is_object() && base.contains("config") && !base.contains("plant")) base = base.at("config");
    base_cfg = parse_config(base);
    if (spec.values.empty()) throw ValidationError("--values", "at least one axis value is required");
    nlohmann::json probe = base;
    set_scalar_path(probe, spec.axis, spec.values.front());
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }

  struct Job {
    double value;
    std::uint64_t seed;
    std::string dir;
    RunConfig cfg;
    RunOutcome outcome;
    bool parsed = false;
  };
  const std::vector<std::uint64_t> seeds = spec.seeds.empty() ? std::vector<std::uint64_t>{base_cfg.sim.seed} : spec.seeds;
  const std::string root = resolve_output_dir(out_dir, base_cfg.output_dir);
  std::vector<Job> jobs;
  for (double value : spec.values) {
    for (std::uint64_t seed : seeds) {
      Job job;
      job.value = value;
      job.seed = seed;
      job.dir = (fs::path(root) / (spec.axis + "=" + axis_label(value) + "_seed" + std::to_string(seed))).string();
      nlohmann::json variant = base;
      try {
        set_scalar_path(variant, spec.axis, value);
        variant["seed"] = seed;
        job.cfg = parse_config(variant);
        job.parsed = true;
      } catch (const ValidationError& e) {
        job.outcome.code = kExitValidation;
        job.outcome.message = e.what();
      }
      jobs.push_back(std::move(job));
    }
  }

  unsigned workers = spec.jobs != 0 ? spec.jobs : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        Job& job = jobs[i];
        if (!job.parsed) continue;
        try {
          job.outcome = execute(job.cfg, job.dir);
        } catch (const std::exception& e) {
          job.outcome.code = kExitRuntime;
          job.outcome.message = e.what();
        }
      }
    });
  }
  for (auto& th : pool) th.join();

  fs::create_directories(root);
  std::ofstream agg(fs::path(root) / "aggregate.csv", std::ios::binary);
  agg << spec.axis << ",seed,final_param_err,final_J,status\n";
  bool failed = false;
  for (const Job& job : jobs) {
    const bool ok = job.outcome.code == kExitOk;
    failed = failed || !ok;
    agg << format_double(job.value) << ',' << job.seed << ','
        << (ok ? format_double(job.outcome.summary.final_param_err) : "nan") << ','
        << (ok ? format_double(job.outcome.summary.final_tracking) : "nan") << ',' << (ok ? "ok" : "failed") << '\n';
    if (!ok) err << spec.axis << "=" << axis_label(job.value) << " seed " << job.seed << ": " << job.outcome.message << '\n';
  }
  out << jobs.size() << " runs, aggregate written to " << (fs::path(root) / "aggregate.csv").string() << '\n';
  return failed ? kExitPartialSweep : kExitOk;
}

int cmd_dare(const std::string& matrix_path, std::ostream& out, std::ostream& err) {
  Matrix a, q, r;
  DareOptions options;
  try {
    const nlohmann::json j = read_json_file(matrix_path);
    if (!j.is_object()) throw ValidationError("", "expected an object with A, Q, R");
    for (const char* key : {"A", "Q", "R"}) {
      if (!j.contains(key)) throw ValidationError(key, "required field is missing");
    }
    a = json_to_matrix(j.at("A"), "A");
    q = json_to_matrix(j.at("Q"), "Q");
    r = json_to_matrix(j.at("R"), "R");
    if (j.contains("tol")) options.tolerance = j.at("tol").get<double>();
    if (j.contains("max_iter")) options.max_iterations = j.at("max_iter").get<std::size_t>();
    if (a.rows() != a.cols() || q.rows() != a.rows() || q.cols() != a.cols() || r.rows() != a.rows() ||
        r.cols() != a.cols()) {
      throw ValidationError("", "A, Q and R must be square of equal order");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> re(0.5 * (r + r.transpose()), Eigen::EigenvaluesOnly);
    if (!(re.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, re.eigenvalues().cwiseAbs().maxCoeff()))) {
      throw ValidationError("R", "must be positive definite (nonsingular)");
    }
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }
  try {
    const DareResult res = solve_dare(a, q, r, options);
    out << "P =\n";
    for (Eigen::Index i = 0; i < res.p.rows(); ++i) {
      for (Eigen::Index c = 0; c < res.p.cols(); ++c) out << (c == 0 ? "  " : " ") << format_double(res.p(i, c));
      out << '\n';
    }
    out << "residual = " << format_double(res.residual) << '\n';
    out << "iterations = " << res.iterations << '\n';
    return kExitOk;
  } catch (const ConvergenceError& e) {
    err << "no convergence: " << e.what() << " (last residual " << format_double(e.residual()) << ")\n";
    return kExitRuntime;
  } catch (const DomainError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }
}

int cmd_validate(const std::string& config_path, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config_path);
    out << "ok: " << (cfg.sim.mode == RunMode::kClosedLoop ? "closed_loop" : "open_loop") << ", n=" << cfg.sim.plant.n()
        << ", m=" << cfg.sim.plant.m() << ", T=" << cfg.sim.horizon << '\n';
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace nadac
