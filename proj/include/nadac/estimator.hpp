#pragma once

#include <cstdint>
#include <utility>
#include <variant>

#include <Eigen/Dense>
#include <json.hpp>

#include "nadac/maps.hpp"

namespace nadac {

/// Stacked parameter theta = [A, B]^T of shape (n+m) x n, so that
/// theta^T [x; u] = A x + B u.
class ParameterMatrix {
 public:
  ParameterMatrix() = default;
  ParameterMatrix(int n, int m);
  ParameterMatrix(Matrix entries, int n, int m);

  static ParameterMatrix from_blocks(const Matrix& a, const Matrix& b);

  int n() const { return n_; }
  int m() const { return m_; }
  int rows() const { return n_ + m_; }

  const Matrix& entries() const { return entries_; }
  Matrix& entries() { return entries_; }

  Matrix a_block() const { return entries_.topRows(n_).transpose(); }
  Matrix b_block() const { return entries_.bottomRows(m_).transpose(); }

  /// theta^T phi
  Vector apply(const Vector& phi) const { return entries_.transpose() * phi; }

  double frobenius_norm() const { return entries_.norm(); }

 private:
  Matrix entries_;
  int n_ = 0;
  int m_ = 0;
};

struct FrobeniusBall {
  double radius = 1.0;
};

/// ||A||_op <= radius_a and ||B||_op <= radius_b.
struct BlockOperatorBalls {
  double radius_a = 1.0;
  double radius_b = 1.0;
};

using ParameterSetKind = std::variant<FrobeniusBall, BlockOperatorBalls>;

/// Compact convex parameter set Theta together with its shrunken copy
/// Theta_eps = shrink * Theta used as the projection target.
class ParameterSet {
 public:
  ParameterSet(ParameterSetKind kind, double shrink);

  const ParameterSetKind& kind() const { return kind_; }
  double shrink() const { return shrink_; }

  /// The set scaled by `factor` (Theta_eps is scaled(shrink())).
  ParameterSet scaled(double factor) const;
  ParameterSet shrunk() const { return scaled(shrink_); }

  bool contains(const Matrix& theta, int n, double rel_tol = 1e-12) const;
  bool contains(const ParameterMatrix& theta, double rel_tol = 1e-12) const {
    return contains(theta.entries(), theta.n(), rel_tol);
  }
  bool shrunk_contains(const ParameterMatrix& theta) const { return shrunk().contains(theta); }

  /// Euclidean projection (used by the first-order solver and by samplers).
  Matrix euclidean_projection(const Matrix& theta, int n) const;

 private:
  ParameterSetKind kind_;
  double shrink_;
};

/// max over theta in Theta of ||theta^T phi||; exact for both set kinds.
double support_value(const ParameterSet& set, const Vector& phi, int n);

struct ProjectionOptions {
  double tolerance = 1e-10;
  std::size_t max_bisection = 500;
  std::size_t max_iterations = 10000;
  double relative_objective_tol = 1e-12;
};

/// argmin over y in `target` of tr[(x - y)^T M (x - y)] for symmetric positive
/// definite M. Returns x unchanged when it already lies in the target.
Matrix project_weighted(const Matrix& x, const Matrix& weight, const ParameterSet& target, int n,
                        const ProjectionOptions& options = {});

/// tr[(x - y)^T M (x - y)]
double weighted_distance(const Matrix& x, const Matrix& y, const Matrix& weight);

struct EstimatorOptions {
  /// Abort with ContractError when alpha(c_t) drops below kAlphaContractFloor.
  /// When false, tiny moduli are clamped and counted in weak_gain_steps.
  bool strict_alpha_floor = true;
  ProjectionOptions projection;
};

struct EstimatorState {
  ParameterMatrix theta_hat;
  Matrix p_matrix;
  double r_accum = 1.0;
  std::uint64_t step = 0;
  double delta = 0.5;
  std::uint64_t projection_count = 0;
  std::uint64_t weak_gain_steps = 0;
};

struct StepDiagnostics {
  double envelope_radius = 0.0;  // c_t
  double d_gain = 0.0;
  double g_bar = 0.0;
  double a_weight = 0.0;
  double mu_weight = 0.0;
  double r_next = 0.0;
  double quad_form = 0.0;  // phi^T P_t phi
  double residual_norm = 0.0;
  bool projected = false;
};

EstimatorState new_estimator(const ParameterMatrix& theta0, const ParameterSet& set, double delta,
                             const LinkFunction& f);

/// Weights d_t, g_t, mu_t, a_t for regressor phi; r_next already includes ||phi||^2.
StepDiagnostics step_weights(const EstimatorState& state, const Vector& phi, const LinkFunction& f,
                             const ParameterSet& set, const EstimatorOptions& options = {});

/// In-place recursion: weights, covariance down-date, parameter update and,
/// if the candidate leaves Theta, the weighted projection onto Theta_eps.
StepDiagnostics advance(EstimatorState& state, const Vector& phi, const Vector& x_next, const LinkFunction& f,
                        const ParameterSet& set, const EstimatorOptions& options = {});

std::pair<EstimatorState, StepDiagnostics> estimator_step(const EstimatorState& state, const Vector& phi,
                                                          const Vector& x_next, const LinkFunction& f,
                                                          const ParameterSet& set,
                                                          const EstimatorOptions& options = {});

nlohmann::json state_to_json(const EstimatorState& state);
EstimatorState state_from_json(const nlohmann::json& j);

}  // namespace nadac
