#include <algorithm>
#include <cmath>
#include <limits>

#include "nadac/errors.hpp"
#include "nadac/estimator.hpp"

namespace nadac {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double operator_norm(const Matrix& block) {
  if (block.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(block);
  return svd.singularValues()(0);
}

Matrix clip_spectral(const Matrix& block, double radius) {
  if (block.size() == 0) return block;
  Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector s = svd.singularValues();
  if (s.size() == 0 || s(0) <= radius) return block;
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::min(s(i), radius);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

void check_weight(const Matrix& x, const Matrix& weight) {
  if (weight.rows() != weight.cols() || weight.rows() != x.rows()) {
    throw DimensionError("project_weighted: weight must be square with as many rows as x");
  }
}

// Lagrangian solution y(lambda) = (M + lambda I)^{-1} M x in M's eigenbasis;
// ||y(lambda)||_F decreases monotonically in lambda.
Matrix project_frobenius(const Matrix& x, const Matrix& weight, double radius, const ProjectionOptions& opt) {
  if (radius <= 0.0) return Matrix::Zero(x.rows(), x.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(weight);
  const Vector& ev = eig.eigenvalues();
  if (ev.minCoeff() <= 0.0) throw DomainError("project_weighted: weight is not positive definite");
  const Matrix& basis = eig.eigenvectors();
  const Matrix rotated = basis.transpose() * x;
  const Vector row_sq = rotated.rowwise().squaredNorm();

  auto norm_at = [&](double lambda) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      const double s = ev(i) / (ev(i) + lambda);
      acc += s * s * row_sq(i);
    }
    return std::sqrt(acc);
  };
  auto point_at = [&](double lambda) {
    Vector scale(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) scale(i) = ev(i) / (ev(i) + lambda);
    return Matrix(basis * scale.asDiagonal() * rotated);
  };

  double lo = 0.0;
  double hi = ev.maxCoeff();
  std::size_t guard = 0;
  while (norm_at(hi) > radius) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2000) throw ConvergenceError("project_weighted: no bracketing multiplier", x, norm_at(hi) - radius);
  }
  // Bisect to machine precision; the tolerance is the acceptance test.
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (std::size_t it = 0; it < opt.max_bisection; ++it) {
    if (hi - lo <= 4.0 * kEps * hi || radius - norm_at(hi) <= 4.0 * kEps * radius) break;
    const double mid = 0.5 * (lo + hi);
    if (norm_at(mid) > radius) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double gap = radius - norm_at(hi);
  if (gap > opt.tolerance) throw ConvergenceError("project_weighted: bisection did not converge", point_at(hi), gap);
  return point_at(hi);
}

// Accelerated projected gradient with function-value restart.
Matrix project_first_order(const Matrix& x, const Matrix& weight, const ParameterSet& target, int n,
                           const ProjectionOptions& opt) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(weight, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0) throw DomainError("project_weighted: weight is not positive definite");
  const double lipschitz = eig.eigenvalues().maxCoeff();

  Matrix y = target.euclidean_projection(x, n);
  Matrix z = y;
  double t = 1.0;
  double obj = weighted_distance(x, y, weight);
  double last_step = 0.0;
  bool restarted = true;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    const Matrix gradient = weight * (z - x);
    Matrix y_next = target.euclidean_projection(z - gradient / lipschitz, n);
    const double obj_next = weighted_distance(x, y_next, weight);
    if (obj_next > obj) {
      // a plain projected-gradient step from y cannot increase the
      // objective, so an increase right after a restart is roundoff
      if (restarted) return y;
      z = y;
      t = 1.0;
      restarted = true;
      continue;
    }
    restarted = false;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    last_step = (y_next - y).norm();
    z = y_next + ((t - 1.0) / t_next) * (y_next - y);
    const double rel_change = std::abs(obj - obj_next) / std::max(obj_next, 1e-300);
    y = std::move(y_next);
    obj = obj_next;
    t = t_next;
    if (rel_change < opt.relative_objective_tol && last_step <= 1e-9 * (1.0 + y.norm())) return y;
  }
  throw ConvergenceError("project_weighted: first-order solver hit the iteration cap", y, last_step);
}

}  // namespace

ParameterSet::ParameterSet(ParameterSetKind kind, double shrink) : kind_(kind), shrink_(shrink) {
  if (!(shrink > 0.0 && shrink <= 1.0)) throw DomainError("parameter set shrink must lie in (0, 1]");
  std::visit(Overloaded{[](const FrobeniusBall& b) {
                          if (!(b.radius > 0.0)) throw DomainError("ball radius must be positive");
                        },
                        [](const BlockOperatorBalls& b) {
                          if (!(b.radius_a > 0.0) || !(b.radius_b > 0.0)) {
                            throw DomainError("block radii must be positive");
                          }
                        }},
             kind_);
}

ParameterSet ParameterSet::scaled(double factor) const {
  return std::visit(Overloaded{[&](const FrobeniusBall& b) {
                                 return ParameterSet(FrobeniusBall{b.radius * factor}, shrink_);
                               },
                               [&](const BlockOperatorBalls& b) {
                                 return ParameterSet(
                                     BlockOperatorBalls{b.radius_a * factor, b.radius_b * factor}, shrink_);
                               }},
                    kind_);
}

bool ParameterSet::contains(const Matrix& theta, int n, double rel_tol) const {
  return std::visit(Overloaded{[&](const FrobeniusBall& b) { return theta.norm() <= b.radius * (1.0 + rel_tol); },
                               [&](const BlockOperatorBalls& b) {
                                 const auto m = theta.rows() - n;
                                 return operator_norm(theta.topRows(n)) <= b.radius_a * (1.0 + rel_tol) &&
                                        operator_norm(theta.bottomRows(m)) <= b.radius_b * (1.0 + rel_tol);
                               }},
                    kind_);
}

Matrix ParameterSet::euclidean_projection(const Matrix& theta, int n) const {
  return std::visit(Overloaded{[&](const FrobeniusBall& b) -> Matrix {
                                 const double norm = theta.norm();
                                 if (norm <= b.radius) return theta;
                                 return theta * (b.radius / norm);
                               },
                               [&](const BlockOperatorBalls& b) -> Matrix {
                                 const auto m = theta.rows() - n;
                                 Matrix out(theta.rows(), theta.cols());
                                 out.topRows(n) = clip_spectral(theta.topRows(n), b.radius_a);
                                 out.bottomRows(m) = clip_spectral(theta.bottomRows(m), b.radius_b);
                                 return out;
                               }},
                    kind_);
}

double support_value(const ParameterSet& set, const Vector& phi, int n) {
  return std::visit(Overloaded{[&](const FrobeniusBall& b) { return b.radius * phi.norm(); },
                               [&](const BlockOperatorBalls& b) {
                                 const auto m = phi.size() - n;
                                 return b.radius_a * phi.head(n).norm() + b.radius_b * phi.tail(m).norm();
                               }},
                    set.kind());
}

double weighted_distance(const Matrix& x, const Matrix& y, const Matrix& weight) {
  const Matrix diff = x - y;
  return (diff.transpose() * weight * diff).trace();
}

Matrix project_weighted(const Matrix& x, const Matrix& weight, const ParameterSet& target, int n,
                        const ProjectionOptions& options) {
  check_weight(x, weight);
  if (!x.allFinite() || !weight.allFinite()) throw DomainError("project_weighted: non-finite input");
  if (target.contains(x, n, 0.0)) return x;
  return std::visit(Overloaded{[&](const FrobeniusBall& b) { return project_frobenius(x, weight, b.radius, options); },
                               [&](const BlockOperatorBalls&) {
                                 return project_first_order(x, weight, target, n, options);
                               }},
                    target.kind());
}

}  // namespace nadac
