#include "nadac/estimator.hpp"

#include <cmath>
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

void check_regressor(const EstimatorState& state, const Vector& phi) {
  if (phi.size() != state.theta_hat.rows()) {
    std::ostringstream msg;
    msg << "regressor has length " << phi.size() << ", expected n+m=" << state.theta_hat.rows();
    throw DimensionError(msg.str());
  }
  if (!phi.allFinite()) throw DomainError("estimator: non-finite regressor");
}

nlohmann::json flatten(const Matrix& mat) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mat.rows(); ++i)
    for (Eigen::Index j = 0; j < mat.cols(); ++j) out.push_back(mat(i, j));
  return out;
}

Matrix unflatten(const nlohmann::json& values, Eigen::Index rows, Eigen::Index cols, const char* field) {
  if (!values.is_array() || values.size() != static_cast<std::size_t>(rows * cols)) {
    throw ValidationError(field, "expected " + std::to_string(rows * cols) + " row-major entries");
  }
  Matrix mat(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) mat(i, j) = values[k++].get<double>();
  return mat;
}

}  // namespace

ParameterMatrix::ParameterMatrix(int n, int m) : entries_(Matrix::Zero(n + m, n)), n_(n), m_(m) {
  if (n <= 0 || m < 0) throw DimensionError("parameter matrix needs n > 0 and m >= 0");
}

ParameterMatrix::ParameterMatrix(Matrix entries, int n, int m) : entries_(std::move(entries)), n_(n), m_(m) {
  if (n <= 0 || m < 0) throw DimensionError("parameter matrix needs n > 0 and m >= 0");
  if (entries_.rows() != n + m || entries_.cols() != n) {
    std::ostringstream msg;
    msg << "parameter matrix must be " << (n + m) << "x" << n << ", got " << entries_.rows() << "x"
        << entries_.cols();
    throw DimensionError(msg.str());
  }
  if (!entries_.allFinite()) throw DomainError("parameter matrix has non-finite entries");
}

ParameterMatrix ParameterMatrix::from_blocks(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) throw DimensionError("A must be square");
  if (b.rows() != a.rows()) throw DimensionError("B must have as many rows as A");
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  Matrix stacked(n + m, n);
  stacked.topRows(n) = a.transpose();
  stacked.bottomRows(m) = b.transpose();
  return {std::move(stacked), n, m};
}

EstimatorState new_estimator(const ParameterMatrix& theta0, const ParameterSet& set, double delta,
                             const LinkFunction& f) {
  if (f.dim() != theta0.n()) throw DimensionError("link dimension differs from state dimension");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw PreconditionError("delta must be positive");
  if (!set.contains(theta0)) throw PreconditionError("initial estimate lies outside the parameter set");
  EstimatorState state;
  state.theta_hat = theta0;
  state.p_matrix = Matrix::Identity(theta0.rows(), theta0.rows());
  state.r_accum = 1.0;
  state.step = 0;
  state.delta = delta;
  return state;
}

StepDiagnostics step_weights(const EstimatorState& state, const Vector& phi, const LinkFunction& f,
                             const ParameterSet& set, const EstimatorOptions& options) {
  check_regressor(state, phi);
  StepDiagnostics diag;
  diag.r_next = state.r_accum + phi.squaredNorm();
  diag.envelope_radius = state.theta_hat.apply(phi).norm() + support_value(set, phi, state.theta_hat.n());
  const auto floor = options.strict_alpha_floor ? EnvelopeFloor::kStrict : EnvelopeFloor::kClamp;
  diag.d_gain = 0.5 * alpha_env(f, diag.envelope_radius, floor);
  diag.g_bar = beta_env(f, diag.envelope_radius);
  diag.quad_form = phi.dot(state.p_matrix * phi);
  diag.mu_weight = std::pow(1.0 + std::log(diag.r_next), 1.0 + state.delta) +
                   diag.d_gain * diag.g_bar * diag.g_bar * diag.quad_form;
  diag.a_weight = 1.0 / (diag.mu_weight + diag.d_gain * diag.d_gain * diag.quad_form);
  return diag;
}

StepDiagnostics advance(EstimatorState& state, const Vector& phi, const Vector& x_next, const LinkFunction& f,
                        const ParameterSet& set, const EstimatorOptions& options) {
  const int n = state.theta_hat.n();
  if (x_next.size() != n) throw DimensionError("next state has wrong dimension");
  if (!x_next.allFinite()) throw DomainError("estimator: non-finite observation");

  StepDiagnostics diag = step_weights(state, phi, f, set, options);
  if (2.0 * diag.d_gain < kAlphaContractFloor) ++state.weak_gain_steps;

  const double d = diag.d_gain;
  double shrink = diag.a_weight * d * d;
  if (shrink * diag.quad_form >= 1.0) {
    // a_t (mu_t + d_t^2 q) = 1 forces a_t d_t^2 q < 1; recompute in extended precision.
    const long double dl = d;
    const long double q = diag.quad_form;
    const long double a = 1.0L / (static_cast<long double>(diag.mu_weight) + dl * dl * q);
    if (a * dl * dl * q >= 1.0L) {
      throw DomainError("estimator: covariance down-date lost positive definiteness at step " +
                        std::to_string(state.step));
    }
    diag.a_weight = static_cast<double>(a);
    shrink = static_cast<double>(a * dl * dl);
  }

  const Vector p_phi = state.p_matrix * phi;
  Matrix p_next = state.p_matrix - shrink * p_phi * p_phi.transpose();
  p_next = 0.5 * (p_next + p_next.transpose()).eval();

  const Vector prediction = eval(f, state.theta_hat.apply(phi));
  const Vector innovation = x_next - prediction;
  diag.residual_norm = innovation.norm();

  Matrix candidate = state.theta_hat.entries() + (d / diag.mu_weight) * (p_next * phi) * innovation.transpose();
  if (!candidate.allFinite() || !p_next.allFinite()) {
    throw DomainError("estimator: non-finite update at step " + std::to_string(state.step));
  }

  if (set.contains(candidate, n)) {
    state.theta_hat.entries() = std::move(candidate);
  } else {
    Matrix p_inv = p_next.ldlt().solve(Matrix::Identity(p_next.rows(), p_next.cols()));
    p_inv = 0.5 * (p_inv + p_inv.transpose()).eval();
    state.theta_hat.entries() = project_weighted(candidate, p_inv, set.shrunk(), n, options.projection);
    ++state.projection_count;
    diag.projected = true;
  }
  state.p_matrix = std::move(p_next);
  state.r_accum = diag.r_next;
  ++state.step;
  return diag;
}

std::pair<EstimatorState, StepDiagnostics> estimator_step(const EstimatorState& state, const Vector& phi,
                                                          const Vector& x_next, const LinkFunction& f,
                                                          const ParameterSet& set, const EstimatorOptions& options) {
  EstimatorState next = state;
  StepDiagnostics diag = advance(next, phi, x_next, f, set, options);
  return {std::move(next), diag};
}

nlohmann::json state_to_json(const EstimatorState& state) {
  return {{"n", state.theta_hat.n()},
          {"m", state.theta_hat.m()},
          {"theta_hat", flatten(state.theta_hat.entries())},
          {"p_matrix", flatten(state.p_matrix)},
          {"r", state.r_accum},
          {"t", state.step},
          {"delta", state.delta},
          {"projection_count", state.projection_count},
          {"weak_gain_steps", state.weak_gain_steps}};
}

EstimatorState state_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    const int m = j.at("m").get<int>();
    EstimatorState state;
    state.theta_hat = ParameterMatrix(unflatten(j.at("theta_hat"), n + m, n, "theta_hat"), n, m);
    state.p_matrix = unflatten(j.at("p_matrix"), n + m, n + m, "p_matrix");
    state.r_accum = j.at("r").get<double>();
    state.step = j.at("t").get<std::uint64_t>();
    state.delta = j.at("delta").get<double>();
    state.projection_count = j.at("projection_count").get<std::uint64_t>();
    state.weak_gain_steps = j.value("weak_gain_steps", std::uint64_t{0});
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("estimator_state", e.what());
  }
}

}  // namespace nadac
