#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nadac/control.hpp"
#include "nadac/estimator.hpp"
#include "nadac/maps.hpp"
#include "nadac/metrics.hpp"
#include "nadac/rng.hpp"

namespace nadac {

struct UniformCubeNoise {
  double half_width = 0.1;
};

/// Per-coordinate N(0, sigma^2) conditioned on |w_i| <= truncation.
struct TruncatedGaussianNoise {
  double sigma = 1.0;
  double truncation = 3.0;
};

/// Unbounded; only admissible with unbounded links.
struct GaussianNoise {
  double sigma = 1.0;
};

/// Noise enters before a hard clamp: x' = clamp(z + eta, 0, N) with
/// eta ~ N(0, sigma^2). The additive noise x' - h(z) is then induced. The cap
/// N is taken from the (smoothed clamp) link.
struct InsideClampNoise {
  double sigma = 1.0;
};

using NoiseKind = std::variant<UniformCubeNoise, TruncatedGaussianNoise, GaussianNoise, InsideClampNoise>;

struct NoiseSpec {
  NoiseKind kind;
};

/// One i.i.d. draw (eta for inside-clamp noise, w otherwise).
Vector noise_sample(const NoiseSpec& spec, int n, Rng& rng);

/// Throws ValidationError when the noise family is incompatible with the link.
void check_noise_link(const NoiseSpec& spec, const LinkFunction& link);

bool is_inside_clamp(const NoiseSpec& spec);
double noise_sigma(const NoiseSpec& spec);

struct PlantSpec {
  ParameterMatrix theta_star;
  LinkFunction link = LinkFunction::identity(1);
  Vector x0;

  int n() const { return theta_star.n(); }
  int m() const { return theta_star.m(); }
};

/// f(A* x + B* u) + w
Vector plant_step(const PlantSpec& spec, const Vector& x, const Vector& u, const Vector& w);

/// One transition driven by a raw noise draw; handles inside-clamp noise.
Vector plant_transition(const PlantSpec& spec, const NoiseSpec& noise, const Vector& x, const Vector& u,
                        const Vector& draw);

enum class RunMode { kClosedLoop, kOpenLoop };

struct ZeroInput {};
struct IidUniformInput {
  double half_width = 1.0;
};
struct StateFeedbackInput {
  Matrix gain;  // m x n, u = K x
};
using OpenLoopInput = std::variant<ZeroInput, IidUniformInput, StateFeedbackInput>;

struct SimulationConfig {
  PlantSpec plant;
  ParameterSet set{FrobeniusBall{1.0}, 1.0};
  ParameterMatrix theta0;
  double delta = 0.5;
  EstimatorOptions estimator;
  PolicyMechanism policy = PolicyMechanism::zero(1);
  ProbingSignal probe;
  NoiseSpec noise{UniformCubeNoise{}};
  RunMode mode = RunMode::kClosedLoop;
  OpenLoopInput open_loop = ZeroInput{};
  std::uint64_t horizon = 1000;
  std::uint64_t seed = 0;
  std::uint64_t log_stride = 1;
  std::uint64_t eig_stride = 100;
  double divergence_ceiling = 1e9;
  double gamma = 4.0;
  std::optional<StageCost> stage_cost;
};

/// Row t: state, input and probe at t, the noise consumed by the transition
/// t -> t+1, the reference pair, and diagnostics of the estimator step taken
/// at t. param_err and V use the estimate before that step.
struct StepRow {
  std::uint64_t t = 0;
  Vector x, u, v, w, xstar, ustar;
  double param_err = 0.0;
  double tracking = 0.0;  // J_t, NaN in open loop
  double lambda = 0.0;
  double lyapunov = 0.0;  // V_t
  double d = 0.0;
  double mu = 0.0;
  double a = 0.0;
  bool projected = false;

  double envelope_radius = 0.0;
  double theta_increment = 0.0;  // ||theta_{t+1} - theta_t||_F
  double log_r = 0.0;            // log r_t after absorbing phi_t
  double pred_regret = 0.0;      // cumulative through t
  double lyap_companion = 0.0;   // sum_{tau < t} a ||psi||^2
  double sign_regret = 0.0;
  double state_sq_avg = 0.0;
  double regressor_pow_avg = 0.0;
  double stage_regret = 0.0;
  std::uint64_t projections = 0;
};

struct RunSummary {
  std::uint64_t steps = 0;
  double final_param_err = 0.0;
  double final_tracking = 0.0;
  double final_sign_regret = 0.0;
  double final_lambda = 0.0;
  double prediction_regret = 0.0;
  double gain_ratio = 0.0;
  double growth_c1 = 0.0;  // ||u_t|| <= c1 ||x_t|| + c1 on the run
  double state_sq_avg = 0.0;
  std::uint64_t projection_count = 0;
  std::uint64_t last_projection_step = 0;
  std::uint64_t weak_gain_steps = 0;
  std::uint64_t riccati_solves = 0;
  double wall_time_s = 0.0;
  bool aborted = false;
  std::string abort_message;
};

struct RunRecord {
  int n = 0;
  int m = 0;
  std::vector<StepRow> rows;
  Vector final_state;
  EstimatorState final_estimator;
  RunSummary summary;
};

RunRecord run_closed_loop(const SimulationConfig& config);
RunRecord run_open_loop_id(const SimulationConfig& config);
/// Dispatches on config.mode.
RunRecord run(const SimulationConfig& config);

/// ||x*_t(x0) - x*_t(x0_alt)|| for t = 0..steps on a shared noise stream.
std::vector<double> reference_distances(const SimulationConfig& config, const Vector& x0_alt, std::uint64_t steps);

}  // namespace nadac
