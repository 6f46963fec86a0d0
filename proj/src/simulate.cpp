#include "nadac/simulate.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "nadac/errors.hpp"

namespace nadac {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double clamp_cap(const LinkFunction& link) {
  const auto* sc = std::get_if<SmoothedClampLink>(&link.kind());
  if (sc == nullptr) throw ValidationError("noise.kind", "inside_clamp noise requires a smoothed_clamp link");
  return sc->cap;
}

Vector stack(const Vector& x, const Vector& u) {
  Vector phi(x.size() + u.size());
  phi << x, u;
  return phi;
}

struct Loop {
  const SimulationConfig& cfg;
  bool closed;
  RunRecord record;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Loop(const SimulationConfig& c, bool closed_loop) : cfg(c), closed(closed_loop) {}

  [[noreturn]] void abort(const std::string& message, std::uint64_t step) {
    record.summary.aborted = true;
    record.summary.abort_message = message;
    record.summary.steps = step;
    finish_timing();
    throw RunAbort(message, step, std::make_shared<RunRecord>(std::move(record)));
  }

  void finish_timing() {
    record.summary.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  void check_state(const Vector& x, std::uint64_t t, const char* which) {
    if (!x.allFinite()) {
      std::ostringstream msg;
      msg << which << " state became non-finite at step " << t;
      abort(msg.str(), t);
    }
    if (x.norm() > cfg.divergence_ceiling) {
      std::ostringstream msg;
      msg << which << " state norm " << x.norm() << " exceeded the divergence ceiling " << cfg.divergence_ceiling
          << " at step " << t;
      abort(msg.str(), t);
    }
  }

  Vector open_loop_input(const Vector& x, Rng& rng, int m) {
    return std::visit(Overloaded{[&](const ZeroInput&) -> Vector { return Vector::Zero(m); },
                                 [&](const IidUniformInput& in) -> Vector {
                                   Vector u(m);
                                   for (int i = 0; i < m; ++i) u(i) = rng.uniform(-in.half_width, in.half_width);
                                   return u;
                                 },
                                 [&](const StateFeedbackInput& in) -> Vector {
                                   if (in.gain.rows() != m || in.gain.cols() != x.size()) {
                                     throw DimensionError("state-feedback gain must be m x n");
                                   }
                                   return in.gain * x;
                                 }},
                      cfg.open_loop);
  }

  RunRecord execute() {
    const PlantSpec& plant = cfg.plant;
    const int n = plant.n();
    const int m = plant.m();
    record.n = n;
    record.m = m;
    if (plant.link.dim() != n) throw DimensionError("link dimension differs from the state dimension");
    if (plant.x0.size() != n) throw DimensionError("x0 has the wrong dimension");
    if (cfg.theta0.n() != n || cfg.theta0.m() != m) throw DimensionError("theta0 shape differs from theta*");
    if (!cfg.set.shrunk().contains(plant.theta_star)) {
      throw PreconditionError("theta* must lie inside the shrunken parameter set");
    }
    if (cfg.log_stride == 0 || cfg.eig_stride == 0) throw PreconditionError("strides must be positive");
    check_noise_link(cfg.noise, plant.link);
    if (closed && cfg.policy.input_dim(n) != m) throw DimensionError("policy input dimension differs from m");

    Rng noise_rng(cfg.seed, Stream::kPlantNoise);
    Rng probe_rng(cfg.seed, Stream::kProbe);
    Rng policy_rng(cfg.seed, Stream::kPolicy);

    EstimatorState est = new_estimator(cfg.theta0, cfg.set, cfg.delta, plant.link);
    ParameterMatrix theta_prev = cfg.theta0;
    RiccatiCache cache;
    RiccatiCache ref_cache;
    MetricAccumulator acc(n, m, cfg.gamma, cfg.stage_cost);
    const Matrix& theta_star = plant.theta_star.entries();

    Vector x = plant.x0;
    Vector xs = plant.x0;
    double lambda = 0.0;
    double gain_num = 0.0;
    double gain_den = 1.0;
    RunSummary& sum = record.summary;

    for (std::uint64_t t = 0; t < cfg.horizon; ++t) {
      check_state(x, t, "adaptive");
      if (closed) check_state(xs, t, "reference");

      const double param_err = (est.theta_hat.entries() - theta_star).norm();
      const double lyap = lyapunov_value(theta_star, est.theta_hat.entries(), est.p_matrix);
      const double lyap_companion = t == 0 ? 0.0 : acc.weighted_prediction_sum();

      Vector u, v, us;
      try {
        if (closed) {
          AdaptiveInput in = adaptive_input(cfg.policy, theta_prev, x, cfg.probe, t, probe_rng, &cfg.set, &cache);
          u = std::move(in.u);
          v = std::move(in.v);
          us = policy_eval(cfg.policy, plant.theta_star, xs, nullptr, &ref_cache);
        } else {
          u = open_loop_input(x, policy_rng, m);
          v = Vector::Zero(m);
        }
      } catch (const ConvergenceError& e) {
        abort(std::string("controller failed: ") + e.what(), t);
      }
      if (!u.allFinite()) abort("non-finite input at step " + std::to_string(t), t);

      const Vector draw = noise_sample(cfg.noise, n, noise_rng);
      const Vector phi = stack(x, u);
      const Vector x_next = plant_transition(plant, cfg.noise, x, u, draw);
      Vector xs_next;
      if (closed) xs_next = plant_transition(plant, cfg.noise, xs, us, draw);

      const Matrix theta_before = est.theta_hat.entries();
      const Vector psi = eval(plant.link, plant.theta_star.apply(phi)) - eval(plant.link, est.theta_hat.apply(phi));

      StepDiagnostics diag;
      try {
        diag = advance(est, phi, x_next, plant.link, cfg.set, cfg.estimator);
      } catch (const DomainError& e) {
        abort(std::string("estimator: ") + e.what(), t);
      } catch (const ContractError& e) {
        abort(std::string("estimator: ") + e.what(), t);
      } catch (const ConvergenceError& e) {
        abort(std::string("estimator: ") + e.what(), t);
      }

      MetricSample sample;
      sample.phi = phi;
      sample.x = x;
      sample.u = u;
      if (closed) {
        sample.xstar = &xs;
        sample.ustar = &us;
      }
      sample.psi_sq = psi.squaredNorm();
      sample.mu = diag.mu_weight;
      sample.a = diag.a_weight;
      acc.absorb(sample);
      if (t % cfg.eig_stride == 0 || t + 1 == cfg.horizon) lambda = acc.lambda_min_normalized();

      gain_num += std::pow(x_next.norm(), cfg.gamma);
      gain_den += std::pow(v.norm(), cfg.gamma) + std::pow(draw.norm(), cfg.gamma);
      sum.growth_c1 = std::max(sum.growth_c1, u.norm() / (1.0 + x.norm()));
      if (diag.projected) sum.last_projection_step = t;

      if (t % cfg.log_stride == 0 || t + 1 == cfg.horizon) {
        StepRow row;
        row.t = t;
        row.x = x;
        row.u = u;
        row.v = v;
        row.w = draw;
        if (closed) {
          row.xstar = xs;
          row.ustar = us;
          row.tracking = acc.tracking_error();
          row.sign_regret = acc.sign_regret();
          if (cfg.stage_cost) row.stage_regret = acc.stage_cost_regret();
        } else {
          row.tracking = kNaN;
          row.sign_regret = kNaN;
          row.stage_regret = kNaN;
        }
        row.param_err = param_err;
        row.lambda = lambda;
        row.lyapunov = lyap;
        row.d = diag.d_gain;
        row.mu = diag.mu_weight;
        row.a = diag.a_weight;
        row.projected = diag.projected;
        row.envelope_radius = diag.envelope_radius;
        row.theta_increment = (est.theta_hat.entries() - theta_before).norm();
        row.log_r = std::log(est.r_accum);
        row.pred_regret = acc.prediction_regret();
        row.lyap_companion = lyap_companion;
        row.state_sq_avg = acc.mean_state_sq();
        row.regressor_pow_avg = acc.mean_regressor_pow_gamma();
        row.projections = est.projection_count;
        record.rows.push_back(std::move(row));
      }

      theta_prev = ParameterMatrix(theta_before, n, m);
      x = x_next;
      if (closed) xs = std::move(xs_next);
      sum.steps = t + 1;
      sum.projection_count = est.projection_count;
      sum.weak_gain_steps = est.weak_gain_steps;
      record.final_estimator = est;
    }
    check_state(x, cfg.horizon, "adaptive");

    record.final_state = x;
    record.final_estimator = est;
    sum.final_param_err = (est.theta_hat.entries() - theta_star).norm();
    if (acc.count() > 0) {
      sum.final_lambda = acc.lambda_min_normalized();
      sum.prediction_regret = acc.prediction_regret();
      sum.state_sq_avg = acc.mean_state_sq();
    }
    if (closed && acc.count() > 0) {
      sum.final_tracking = acc.tracking_error();
      sum.final_sign_regret = acc.sign_regret();
    } else {
      sum.final_tracking = kNaN;
      sum.final_sign_regret = kNaN;
    }
    sum.gain_ratio = gain_num / gain_den;
    sum.riccati_solves = cache.solves;
    finish_timing();
    return std::move(record);
  }
};

}  // namespace

Vector noise_sample(const NoiseSpec& spec, int n, Rng& rng) {
  Vector w(n);
  std::visit(Overloaded{[&](const UniformCubeNoise& k) {
                          for (int i = 0; i < n; ++i) w(i) = rng.uniform(-k.half_width, k.half_width);
                        },
                        [&](const TruncatedGaussianNoise& k) {
                          for (int i = 0; i < n; ++i) {
                            double z;
                            do {
                              z = k.sigma * rng.normal();
                            } while (std::abs(z) > k.truncation);
                            w(i) = z;
                          }
                        },
                        [&](const GaussianNoise& k) {
                          for (int i = 0; i < n; ++i) w(i) = k.sigma * rng.normal();
                        },
                        [&](const InsideClampNoise& k) {
                          for (int i = 0; i < n; ++i) w(i) = k.sigma * rng.normal();
                        }},
             spec.kind);
  return w;
}

void check_noise_link(const NoiseSpec& spec, const LinkFunction& link) {
  std::visit(Overloaded{[](const UniformCubeNoise& k) {
                          // Zero width is allowed for noiseless checks.
                          if (!(k.half_width >= 0.0)) throw ValidationError("noise.half_width", "must be nonnegative");
                        },
                        [](const TruncatedGaussianNoise& k) {
                          if (!(k.sigma > 0.0)) throw ValidationError("noise.sigma", "must be positive");
                          if (!(k.truncation > 0.0)) throw ValidationError("noise.truncation", "must be positive");
                        },
                        [&](const GaussianNoise& k) {
                          if (!(k.sigma > 0.0)) throw ValidationError("noise.sigma", "must be positive");
                          if (link.bounded()) {
                            throw ValidationError("noise.kind",
                                                  "unbounded gaussian noise is not allowed with a bounded link");
                          }
                        },
                        [&](const InsideClampNoise& k) {
                          if (!(k.sigma > 0.0)) throw ValidationError("noise.sigma", "must be positive");
                          const auto* sc = std::get_if<SmoothedClampLink>(&link.kind());
                          if (sc == nullptr) {
                            throw ValidationError("noise.kind", "inside_clamp noise requires a smoothed_clamp link");
                          }
                          if (sc->sigma != k.sigma) {
                            throw ValidationError("plant.link.sigma", "must equal the inside_clamp noise sigma");
                          }
                        }},
             spec.kind);
}

bool is_inside_clamp(const NoiseSpec& spec) { return std::holds_alternative<InsideClampNoise>(spec.kind); }

double noise_sigma(const NoiseSpec& spec) {
  return std::visit(Overloaded{[](const UniformCubeNoise& k) { return k.half_width / std::sqrt(3.0); },
                               [](const TruncatedGaussianNoise& k) { return k.sigma; },
                               [](const GaussianNoise& k) { return k.sigma; },
                               [](const InsideClampNoise& k) { return k.sigma; }},
                    spec.kind);
}

Vector plant_step(const PlantSpec& spec, const Vector& x, const Vector& u, const Vector& w) {
  if (x.size() != spec.n() || u.size() != spec.m() || w.size() != spec.n()) {
    throw DimensionError("plant_step: dimension mismatch");
  }
  return eval(spec.link, spec.theta_star.apply(stack(x, u))) + w;
}

Vector plant_transition(const PlantSpec& spec, const NoiseSpec& noise, const Vector& x, const Vector& u,
                        const Vector& draw) {
  if (!is_inside_clamp(noise)) return plant_step(spec, x, u, draw);
  if (x.size() != spec.n() || u.size() != spec.m() || draw.size() != spec.n()) {
    throw DimensionError("plant_transition: dimension mismatch");
  }
  const double cap = clamp_cap(spec.link);
  const Vector z = spec.theta_star.apply(stack(x, u)) + draw;
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = std::clamp(z(i), 0.0, cap);
  if (!z.allFinite()) out.setConstant(kNaN);
  return out;
}

RunRecord run_closed_loop(const SimulationConfig& config) { return Loop(config, true).execute(); }

RunRecord run_open_loop_id(const SimulationConfig& config) { return Loop(config, false).execute(); }

RunRecord run(const SimulationConfig& config) {
  return config.mode == RunMode::kClosedLoop ? run_closed_loop(config) : run_open_loop_id(config);
}

std::vector<double> reference_distances(const SimulationConfig& config, const Vector& x0_alt, std::uint64_t steps) {
  const PlantSpec& plant = config.plant;
  if (x0_alt.size() != plant.n()) throw DimensionError("alternative initial state has the wrong dimension");
  Rng noise_rng(config.seed, Stream::kPlantNoise);
  RiccatiCache cache_a;
  RiccatiCache cache_b;
  Vector xa = plant.x0;
  Vector xb = x0_alt;
  std::vector<double> out;
  out.reserve(steps + 1);
  out.push_back((xa - xb).norm());
  for (std::uint64_t t = 0; t < steps; ++t) {
    Vector ua, ub;
    if (config.mode == RunMode::kClosedLoop) {
      ua = policy_eval(config.policy, plant.theta_star, xa, nullptr, &cache_a);
      ub = policy_eval(config.policy, plant.theta_star, xb, nullptr, &cache_b);
    } else {
      ua = Vector::Zero(plant.m());
      ub = ua;
    }
    const Vector draw = noise_sample(config.noise, plant.n(), noise_rng);
    xa = plant_transition(plant, config.noise, xa, ua, draw);
    xb = plant_transition(plant, config.noise, xb, ub, draw);
    out.push_back((xa - xb).norm());
  }
  return out;
}

}  // namespace nadac
