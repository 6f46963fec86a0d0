#include "nadac/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nadac/errors.hpp"

#ifndef NADAC_VERSION
#define NADAC_VERSION "unknown"
#endif

namespace nadac {
namespace {

void append_vector(std::string& line, const Vector& v, Eigen::Index expected) {
  for (Eigen::Index i = 0; i < expected; ++i) {
    line += ',';
    line += i < v.size() ? format_double(v(i)) : std::string("nan");
  }
}

void append_names(std::string& line, const char* name, int count) {
  for (int i = 0; i < count; ++i) {
    line += ',';
    line += name;
    line += '[' + std::to_string(i) + ']';
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_header(int n, int m) {
  std::string line = "t";
  append_names(line, "x", n);
  append_names(line, "u", m);
  append_names(line, "v", m);
  append_names(line, "w", n);
  append_names(line, "xstar", n);
  append_names(line, "ustar", m);
  line += ",param_err,J_t,lambda_t,V_t,d_t,mu_t,a_t,projected";
  return line;
}

void write_csv(const RunRecord& record, std::ostream& out) {
  out << csv_header(record.n, record.m) << '\n';
  std::string line;
  for (const StepRow& row : record.rows) {
    line = std::to_string(row.t);
    append_vector(line, row.x, record.n);
    append_vector(line, row.u, record.m);
    append_vector(line, row.v, record.m);
    append_vector(line, row.w, record.n);
    append_vector(line, row.xstar, record.n);
    append_vector(line, row.ustar, record.m);
    for (double value : {row.param_err, row.tracking, row.lambda, row.lyapunov, row.d, row.mu, row.a}) {
      line += ',';
      line += format_double(value);
    }
    line += row.projected ? ",1" : ",0";
    out << line << '\n';
  }
}

void write_csv_file(const RunRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(record, out);
}

nlohmann::json summary_to_json(const RunSummary& s) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return {{"steps", s.steps},
          {"final_param_err", num(s.final_param_err)},
          {"final_J", num(s.final_tracking)},
          {"final_sign_regret", num(s.final_sign_regret)},
          {"final_lambda", num(s.final_lambda)},
          {"prediction_regret", num(s.prediction_regret)},
          {"gain_ratio", num(s.gain_ratio)},
          {"growth_c1", num(s.growth_c1)},
          {"state_sq_avg", num(s.state_sq_avg)},
          {"projection_count", s.projection_count},
          {"last_projection_step", s.last_projection_step},
          {"weak_gain_steps", s.weak_gain_steps},
          {"riccati_solves", s.riccati_solves},
          {"wall_time_s", s.wall_time_s},
          {"aborted", s.aborted},
          {"abort_message", s.abort_message}};
}

std::uint64_t config_hash(const nlohmann::json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string build_version() { return NADAC_VERSION; }

nlohmann::json make_manifest(const RunConfig& config, const RunRecord& record) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config.raw)));
  nlohmann::json m = {{"config", config.raw},
                      {"config_hash", hash},
                      {"seed", config.sim.seed},
                      {"version", build_version()},
                      {"n", record.n},
                      {"m", record.m},
                      {"summary", summary_to_json(record.summary)}};
  if (config.eta) m["eta"] = *config.eta;
  return m;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace nadac
