#include "nadac/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "nadac/errors.hpp"

namespace nadac {
namespace {

using nlohmann::json;

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "expected an object");
}

void expect_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  expect_object(j, path);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) throw ValidationError(join(path, item.key()), "unknown field");
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ValidationError(join(path, key), "required field is missing");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(path, "must be finite");
  return v;
}

double number_or(const json& j, const std::string& path, const char* key, double fallback) {
  return j.contains(key) ? number(j.at(key), join(path, key)) : fallback;
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) throw ValidationError(path, "must be positive");
  return v;
}

std::uint64_t count_value(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) throw ValidationError(path, "must be nonnegative");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  throw ValidationError(path, "expected a nonnegative integer");
}

std::string string_value(const json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path, "expected a string");
  return j.get<std::string>();
}

bool bool_value(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ValidationError(path, "expected true or false");
  return j.get<bool>();
}

Matrix opinion_a() {
  Matrix adj(4, 4);
  adj << 0, 0.4, 0, 0,  //
      0.5, 0, 0, 0.1,   //
      0.3, 0, 0, 0,     //
      0, 0, 0.5, 0;
  return 0.7 * Matrix::Identity(4, 4) + adj;
}

LinkFunction parse_link(const json& j, const std::string& path, int n, const json* noise) {
  const std::string kind = string_value(require(j, path, "kind"), join(path, "kind"));
  try {
    if (kind == "identity") {
      expect_keys(j, path, {"kind"});
      return LinkFunction::identity(n);
    }
    if (kind == "scaled_tanh") {
      expect_keys(j, path, {"kind", "a"});
      return LinkFunction::scaled_tanh(n, positive(require(j, path, "a"), join(path, "a")));
    }
    if (kind == "sigmoid") {
      expect_keys(j, path, {"kind"});
      return LinkFunction::sigmoid(n);
    }
    if (kind == "leaky_relu") {
      expect_keys(j, path, {"kind", "b"});
      const double b = number(require(j, path, "b"), join(path, "b"));
      if (!(b > 0.0 && b < 1.0)) throw ValidationError(join(path, "b"), "slope must lie in (0, 1)");
      return LinkFunction::leaky_relu(n, b);
    }
    if (kind == "gaussian_survival") {
      expect_keys(j, path, {"kind"});
      return LinkFunction::gaussian_survival(n);
    }
    if (kind == "smoothed_clamp") {
      expect_keys(j, path, {"kind", "N", "sigma"});
      const double cap = positive(require(j, path, "N"), join(path, "N"));
      double sigma = 0.0;
      if (j.contains("sigma")) {
        sigma = positive(j.at("sigma"), join(path, "sigma"));
      } else if (noise != nullptr && noise->is_object() && noise->value("kind", "") == "inside_clamp" &&
                 noise->contains("sigma")) {
        sigma = positive(noise->at("sigma"), "noise.sigma");
      } else {
        throw ValidationError(join(path, "sigma"), "required unless inherited from inside_clamp noise");
      }
      return LinkFunction::smoothed_clamp(n, cap, sigma);
    }
  } catch (const DomainError& e) {
    throw ValidationError(path, e.what());
  }
  throw ValidationError(join(path, "kind"), "unknown link kind '" + kind + "'");
}

ParameterSet parse_set(const json& j, const std::string& path) {
  const std::string kind = string_value(require(j, path, "kind"), join(path, "kind"));
  const double shrink = number_or(j, path, "shrink", 0.5);
  if (!(shrink > 0.0 && shrink <= 1.0)) throw ValidationError(join(path, "shrink"), "must lie in (0, 1]");
  if (kind == "frobenius_ball") {
    expect_keys(j, path, {"kind", "radius", "shrink"});
    return {FrobeniusBall{positive(require(j, path, "radius"), join(path, "radius"))}, shrink};
  }
  if (kind == "block_operator_balls") {
    expect_keys(j, path, {"kind", "radius_a", "radius_b", "shrink"});
    return {BlockOperatorBalls{positive(require(j, path, "radius_a"), join(path, "radius_a")),
                               positive(require(j, path, "radius_b"), join(path, "radius_b"))},
            shrink};
  }
  throw ValidationError(join(path, "kind"), "unknown parameter set kind '" + kind + "'");
}

NoiseSpec parse_noise(const json& j, const std::string& path) {
  const std::string kind = string_value(require(j, path, "kind"), join(path, "kind"));
  if (kind == "uniform_cube") {
    expect_keys(j, path, {"kind", "half_width"});
    const double h = number(require(j, path, "half_width"), join(path, "half_width"));
    if (h < 0.0) throw ValidationError(join(path, "half_width"), "must be nonnegative");
    return {UniformCubeNoise{h}};
  }
  if (kind == "truncated_gaussian") {
    expect_keys(j, path, {"kind", "sigma", "truncation"});
    return {TruncatedGaussianNoise{positive(require(j, path, "sigma"), join(path, "sigma")),
                                   positive(require(j, path, "truncation"), join(path, "truncation"))}};
  }
  if (kind == "gaussian") {
    expect_keys(j, path, {"kind", "sigma"});
    return {GaussianNoise{positive(require(j, path, "sigma"), join(path, "sigma"))}};
  }
  if (kind == "inside_clamp") {
    expect_keys(j, path, {"kind", "sigma"});
    return {InsideClampNoise{positive(require(j, path, "sigma"), join(path, "sigma"))}};
  }
  throw ValidationError(join(path, "kind"), "unknown noise kind '" + kind + "'");
}

GainFamily parse_gain(const json& j, const std::string& path) {
  const std::string family = string_value(require(j, path, "family"), join(path, "family"));
  if (family == "constant") {
    expect_keys(j, path, {"family", "kappa0"});
    return ConstantGain{number(require(j, path, "kappa0"), join(path, "kappa0"))};
  }
  if (family == "affine_norm") {
    expect_keys(j, path, {"family", "c1", "c2"});
    return AffineNormGain{number(require(j, path, "c1"), join(path, "c1")),
                          number(require(j, path, "c2"), join(path, "c2"))};
  }
  throw ValidationError(join(path, "family"), "unknown gain family '" + family + "'");
}

PolicyMechanism parse_policy(const json& j, const std::string& path, int m) {
  const std::string kind = string_value(require(j, path, "kind"), join(path, "kind"));
  try {
    if (kind == "zero") {
      expect_keys(j, path, {"kind"});
      return PolicyMechanism::zero(m);
    }
    if (kind == "pinning_leader") {
      expect_keys(j, path, {"kind", "leader", "gain", "pin_pattern"});
      const double leader = number(require(j, path, "leader"), join(path, "leader"));
      const GainFamily gain = parse_gain(require(j, path, "gain"), join(path, "gain"));
      Vector pattern = json_to_vector(require(j, path, "pin_pattern"), join(path, "pin_pattern"));
      return PolicyMechanism::pinning(leader, gain, std::move(pattern));
    }
    if (kind == "riccati_feedback") {
      expect_keys(j, path, {"kind", "Q", "R", "lift"});
      Matrix q = json_to_matrix(require(j, path, "Q"), join(path, "Q"));
      Matrix r = json_to_matrix(require(j, path, "R"), join(path, "R"));
      InputLift lift = InputLift::kIdentity;
      if (j.contains("lift")) {
        const std::string name = string_value(j.at("lift"), join(path, "lift"));
        if (name == "quadratic_monomials") {
          lift = InputLift::kQuadraticMonomials;
        } else if (name != "identity") {
          throw ValidationError(join(path, "lift"), "expected 'identity' or 'quadratic_monomials'");
        }
      }
      return PolicyMechanism::riccati(std::move(q), std::move(r), lift);
    }
  } catch (const DomainError& e) {
    throw ValidationError(path, e.what());
  } catch (const DimensionError& e) {
    throw ValidationError(path, e.what());
  }
  throw ValidationError(join(path, "kind"), "unknown policy kind '" + kind + "'");
}

ProbingSignal parse_probe(const json& j, const std::string& path, int dim) {
  expect_keys(j, path, {"enabled", "b", "distribution", "half_width"});
  ProbingSignal sig;
  sig.dim = dim;
  sig.decay_b = number_or(j, path, "b", 0.0);
  if (sig.decay_b < 0.0) throw ValidationError(join(path, "b"), "must be nonnegative");
  const std::string dist = j.contains("distribution")
                               ? string_value(j.at("distribution"), join(path, "distribution"))
                               : std::string("uniform_cube");
  if (dist == "uniform_cube") {
    sig.distribution = ProbeDistribution::kUniformCube;
    sig.half_width = number_or(j, path, "half_width", 1.0);
    if (sig.half_width < 0.0) throw ValidationError(join(path, "half_width"), "must be nonnegative");
  } else if (dist == "identity_cov") {
    if (j.contains("half_width")) throw ValidationError(join(path, "half_width"), "fixed at sqrt(3) for identity_cov");
    sig.distribution = ProbeDistribution::kScaledIdentityCov;
  } else {
    throw ValidationError(join(path, "distribution"), "expected 'uniform_cube' or 'identity_cov'");
  }
  if (j.contains("enabled") && !bool_value(j.at("enabled"), join(path, "enabled"))) {
    sig.distribution = ProbeDistribution::kUniformCube;
    sig.half_width = 0.0;
  }
  return sig;
}

OpenLoopInput parse_open_loop(const json& j, const std::string& path, int n, int m) {
  const std::string kind = string_value(require(j, path, "kind"), join(path, "kind"));
  if (kind == "zero") {
    expect_keys(j, path, {"kind"});
    return ZeroInput{};
  }
  if (kind == "iid_uniform") {
    expect_keys(j, path, {"kind", "half_width"});
    return IidUniformInput{positive(require(j, path, "half_width"), join(path, "half_width"))};
  }
  if (kind == "state_feedback") {
    expect_keys(j, path, {"kind", "K"});
    Matrix k = json_to_matrix(require(j, path, "K"), join(path, "K"));
    if (k.rows() != m || k.cols() != n) {
      throw ValidationError(join(path, "K"), "must be " + std::to_string(m) + "x" + std::to_string(n));
    }
    return StateFeedbackInput{std::move(k)};
  }
  throw ValidationError(join(path, "kind"), "unknown open-loop input kind '" + kind + "'");
}

std::optional<StageCost> parse_stage_cost(const json& j, const std::string& path) {
  const std::string kind = string_value(require(j, path, "kind"), join(path, "kind"));
  if (kind == "constant") {
    expect_keys(j, path, {"kind", "value"});
    return constant_cost(number(require(j, path, "value"), join(path, "value")));
  }
  if (kind == "state_coordinate") {
    expect_keys(j, path, {"kind", "index"});
    return state_coordinate_cost(static_cast<int>(count_value(require(j, path, "index"), join(path, "index"))));
  }
  if (kind == "clipped_quadratic") {
    expect_keys(j, path, {"kind", "clip"});
    return clipped_quadratic_cost(positive(require(j, path, "clip"), join(path, "clip")));
  }
  throw ValidationError(join(path, "kind"), "unknown stage cost kind '" + kind + "'");
}

/// Merges preset defaults under explicit plant fields.
json expand_plant(const json& j) {
  expect_object(j, "plant");
  if (!j.contains("preset")) return j;
  json merged = plant_preset(string_value(j.at("preset"), "plant.preset"), "plant.preset");
  for (const auto& item : j.items()) {
    if (item.key() != "preset") merged[item.key()] = item.value();
  }
  return merged;
}

}  // namespace

Matrix json_to_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ValidationError(path, "expected a non-empty array of rows");
  const std::size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
  if (cols == 0) throw ValidationError(path, "rows must be non-empty arrays");
  Matrix out(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    if (!j.at(i).is_array() || j.at(i).size() != cols) throw ValidationError(row_path, "ragged matrix row");
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          number(j.at(i).at(c), row_path + "[" + std::to_string(c) + "]");
    }
  }
  return out;
}

Vector json_to_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ValidationError(path, "expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = number(j.at(i), path + "[" + std::to_string(i) + "]");
  }
  return out;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    out.push_back(std::move(row));
  }
  return out;
}

json plant_preset(const std::string& name, const std::string& path) {
  if (name == "opinion_dynamics") {
    Matrix b = Matrix::Zero(4, 1);
    b(0, 0) = 1.0;
    return {{"link", {{"kind", "scaled_tanh"}, {"a", 2.0}}},
            {"A", matrix_to_json(opinion_a())},
            {"B", matrix_to_json(b)},
            {"x0", {0.5, 0.5, -0.5, -0.5}}};
  }
  if (name == "epidemic_si") {
    const double alpha = 0.15, beta = 0.3, cap = 10.0;
    Matrix a(2, 2);
    a << beta * cap, alpha * cap, alpha * cap, beta * cap;
    Matrix b(2, 5);
    b << -beta, 0, -alpha, -1, 0,  //
        0, -beta, -alpha, 0, -1;
    return {{"link", {{"kind", "smoothed_clamp"}, {"N", cap}}},
            {"A", matrix_to_json(a)},
            {"B", matrix_to_json(b)},
            {"x0", {2.0, 1.0}}};
  }
  throw ValidationError(path, "unknown plant preset '" + name + "'");
}

RunConfig parse_config(const json& input) {
  expect_object(input, "");
  const json& j = (input.contains("config") && !input.contains("plant")) ? input.at("config") : input;
  expect_keys(j, "",
              {"description", "mode", "horizon", "seed", "log_stride", "eig_stride", "divergence_ceiling",
               "output_dir", "plant", "parameter_set", "estimator", "policy", "open_loop_input", "probe", "noise",
               "metrics"});
  RunConfig cfg;
  cfg.raw = j;
  SimulationConfig& sim = cfg.sim;
  if (j.contains("description")) cfg.description = string_value(j.at("description"), "description");
  if (j.contains("output_dir")) cfg.output_dir = string_value(j.at("output_dir"), "output_dir");

  const std::string mode = j.contains("mode") ? string_value(j.at("mode"), "mode") : std::string("closed_loop");
  if (mode == "closed_loop") {
    sim.mode = RunMode::kClosedLoop;
  } else if (mode == "open_loop") {
    sim.mode = RunMode::kOpenLoop;
  } else {
    throw ValidationError("mode", "expected 'closed_loop' or 'open_loop'");
  }
  sim.horizon = count_value(require(j, "", "horizon"), "horizon");
  if (sim.horizon == 0) throw ValidationError("horizon", "must be positive");
  sim.seed = j.contains("seed") ? count_value(j.at("seed"), "seed") : 0;
  if (j.contains("log_stride")) sim.log_stride = count_value(j.at("log_stride"), "log_stride");
  if (j.contains("eig_stride")) sim.eig_stride = count_value(j.at("eig_stride"), "eig_stride");
  if (sim.log_stride == 0) throw ValidationError("log_stride", "must be positive");
  if (sim.eig_stride == 0) throw ValidationError("eig_stride", "must be positive");
  sim.divergence_ceiling = number_or(j, "", "divergence_ceiling", 1e9);
  if (!(sim.divergence_ceiling > 0.0)) throw ValidationError("divergence_ceiling", "must be positive");

  const json& noise_json = require(j, "", "noise");
  expect_object(noise_json, "noise");
  sim.noise = parse_noise(noise_json, "noise");

  const json plant = expand_plant(require(j, "", "plant"));
  expect_keys(plant, "plant", {"link", "A", "B", "x0"});
  const Matrix a = json_to_matrix(require(plant, "plant", "A"), "plant.A");
  const Matrix b = json_to_matrix(require(plant, "plant", "B"), "plant.B");
  if (a.rows() != a.cols()) throw ValidationError("plant.A", "must be square");
  if (b.rows() != a.rows()) throw ValidationError("plant.B", "must have as many rows as plant.A");
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  sim.plant.theta_star = ParameterMatrix::from_blocks(a, b);
  const json& link_json = require(plant, "plant", "link");
  expect_object(link_json, "plant.link");
  sim.plant.link = parse_link(link_json, "plant.link", n, &noise_json);
  sim.plant.x0 = json_to_vector(require(plant, "plant", "x0"), "plant.x0");
  if (sim.plant.x0.size() != n) throw ValidationError("plant.x0", "must have length " + std::to_string(n));
  check_noise_link(sim.noise, sim.plant.link);

  const json& set_json = require(j, "", "parameter_set");
  expect_object(set_json, "parameter_set");
  sim.set = parse_set(set_json, "parameter_set");
  if (!sim.set.shrunk().contains(sim.plant.theta_star)) {
    throw ValidationError("parameter_set", "theta* = [A, B]' must lie inside the shrunken set (shrink * set)");
  }

  const json est = j.contains("estimator") ? j.at("estimator") : json::object();
  expect_keys(est, "estimator", {"theta0", "delta", "strict_alpha_floor"});
  sim.delta = est.contains("delta") ? positive(est.at("delta"), "estimator.delta") : 0.5;
  sim.estimator.strict_alpha_floor =
      est.contains("strict_alpha_floor") ? bool_value(est.at("strict_alpha_floor"), "estimator.strict_alpha_floor")
                                         : true;
  sim.theta0 = ParameterMatrix(n, m);
  if (est.contains("theta0") && !(est.at("theta0").is_string() && est.at("theta0").get<std::string>() == "zero")) {
    const json& t0 = est.at("theta0");
    expect_keys(t0, "estimator.theta0", {"A", "B"});
    const Matrix a0 = json_to_matrix(require(t0, "estimator.theta0", "A"), "estimator.theta0.A");
    const Matrix b0 = json_to_matrix(require(t0, "estimator.theta0", "B"), "estimator.theta0.B");
    if (a0.rows() != n || a0.cols() != n || b0.rows() != n || b0.cols() != m) {
      throw ValidationError("estimator.theta0", "blocks must match the shapes of plant.A and plant.B");
    }
    sim.theta0 = ParameterMatrix::from_blocks(a0, b0);
  }
  if (!sim.set.contains(sim.theta0)) throw ValidationError("estimator.theta0", "must lie inside parameter_set");

  if (sim.mode == RunMode::kClosedLoop) {
    const json& pol = require(j, "", "policy");
    expect_object(pol, "policy");
    sim.policy = parse_policy(pol, "policy", m);
    if (sim.policy.input_dim(n) != m) {
      throw ValidationError("policy", "produces inputs of length " + std::to_string(sim.policy.input_dim(n)) +
                                          " but plant.B has " + std::to_string(m) + " columns");
    }
    const int probe_dim = static_cast<int>(sim.policy.probe_channels(n).size());
    sim.probe = j.contains("probe") ? parse_probe(j.at("probe"), "probe", probe_dim)
                                    : ProbingSignal{0.0, ProbeDistribution::kUniformCube, 0.0, probe_dim};
    if (j.contains("open_loop_input")) throw ValidationError("open_loop_input", "only valid with mode open_loop");
  } else {
    if (j.contains("policy")) throw ValidationError("policy", "only valid with mode closed_loop");
    if (j.contains("probe")) throw ValidationError("probe", "only valid with mode closed_loop");
    sim.open_loop = j.contains("open_loop_input") ? parse_open_loop(j.at("open_loop_input"), "open_loop_input", n, m)
                                                  : OpenLoopInput{ZeroInput{}};
  }

  const json met = j.contains("metrics") ? j.at("metrics") : json::object();
  expect_keys(met, "metrics", {"gamma", "eta", "rate_probes", "stage_cost"});
  sim.gamma = met.contains("gamma") ? positive(met.at("gamma"), "metrics.gamma") : 4.0;
  cfg.rate_probes = met.contains("rate_probes") && bool_value(met.at("rate_probes"), "metrics.rate_probes");
  if (met.contains("stage_cost")) {
    expect_object(met.at("stage_cost"), "metrics.stage_cost");
    sim.stage_cost = parse_stage_cost(met.at("stage_cost"), "metrics.stage_cost");
  }
  if (met.contains("eta")) cfg.eta = positive(met.at("eta"), "metrics.eta");
  if (cfg.rate_probes) {
    if (!(sim.gamma > 2.0)) throw ValidationError("metrics.gamma", "must exceed 2 when rate probes are enabled");
    if (!cfg.eta) {
      const auto interval = eta_interval(sim.probe.decay_b, sim.gamma);
      if (!interval) {
        throw ValidationError("metrics.gamma", "admissible eta interval is empty for probe.b=" +
                                                   std::to_string(sim.probe.decay_b) +
                                                   "; raise gamma or lower b");
      }
      cfg.eta = 0.5 * (interval->first + interval->second);
    }
  }
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("", "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("", "'" + path + "' is not valid JSON: " + e.what());
  }
}

RunConfig load_config(const std::string& path) { return parse_config(read_json_file(path)); }

const json* find_path(const json& j, const std::string& dotted) {
  const json* node = &j;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &node->at(part);
  }
  return node;
}

void set_scalar_path(json& j, const std::string& dotted, double value) {
  const json* found = find_path(j, dotted);
  if (found == nullptr) throw ValidationError(dotted, "sweep axis does not name a field of the config");
  if (!found->is_number()) throw ValidationError(dotted, "sweep axis must be a scalar numeric field");
  json* node = &j;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) node = &(*node)[part];
  if (found->is_number_integer() || found->is_number_unsigned()) {
    if (value != std::floor(value) || value < 0.0) throw ValidationError(dotted, "expects a nonnegative integer");
    *node = static_cast<std::uint64_t>(value);
  } else {
    *node = value;
  }
}

}  // namespace nadac
