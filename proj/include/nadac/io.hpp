#pragma once

#include <cstdint>
#include <ostream>
#include <string>

#include <json.hpp>

#include "nadac/config.hpp"
#include "nadac/simulate.hpp"

namespace nadac {

/// 17 significant digits; non-finite values print as nan / inf / -inf.
std::string format_double(double v);

/// t, x[0..n), u[0..m), v[0..m), w[0..n), xstar[0..n), ustar[0..m), param_err,
/// J_t, lambda_t, V_t, d_t, mu_t, a_t, projected
std::string csv_header(int n, int m);
void write_csv(const RunRecord& record, std::ostream& out);
void write_csv_file(const RunRecord& record, const std::string& path);

nlohmann::json summary_to_json(const RunSummary& summary);

/// FNV-1a over the compact dump of the config.
std::uint64_t config_hash(const nlohmann::json& config);

/// Version string of the build (git describe at configure time).
std::string build_version();

nlohmann::json make_manifest(const RunConfig& config, const RunRecord& record);
void write_json_file(const nlohmann::json& j, const std::string& path);

}  // namespace nadac
