#include "nadac/control.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
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

int monomial_count(int n) { return n * (n + 1) / 2; }

void check_square(const Matrix& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    std::ostringstream msg;
    msg << name << " must be " << n << "x" << n << ", got " << m.rows() << "x" << m.cols();
    throw DimensionError(msg.str());
  }
}

void check_weights(const Matrix& q, const Matrix& r) {
  if (!q.allFinite() || !r.allFinite()) throw DomainError("Riccati weights must be finite");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.cwiseAbs().maxCoeff())) {
    throw DomainError("Q must be symmetric");
  }
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + r.cwiseAbs().maxCoeff())) {
    throw DomainError("R must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> qe(q, Eigen::EigenvaluesOnly);
  if (qe.eigenvalues().minCoeff() < -1e-12 * (1.0 + qe.eigenvalues().cwiseAbs().maxCoeff())) {
    throw DomainError("Q must be positive semidefinite");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> re(r, Eigen::EigenvaluesOnly);
  if (!(re.eigenvalues().minCoeff() > 0.0)) throw DomainError("R must be positive definite");
}

Matrix riccati_gain(const Matrix& a, const Matrix& r, const Matrix& p) {
  return (r + p).ldlt().solve(p * a);
}

Vector raw_feedback(const PolicyMechanism& mech, const ParameterMatrix& theta, const Vector& x, RiccatiCache* cache) {
  return std::visit(
      Overloaded{[&](const PinningLeader& k) -> Vector { return gain_value(k.gain, theta) * k.leader * k.pin_pattern; },
                 [&](const RiccatiFeedback& k) -> Vector {
                   const Matrix a = theta.a_block();
                   check_square(k.q, a.rows(), "Q");
                   if (cache != nullptr && cache->p.size() > 0 && cache->a_block.rows() == a.rows() &&
                       cache->a_block == a) {
                     ++cache->reuses;
                     return riccati_gain(a, k.r, cache->p) * x;
                   }
                   const Matrix* warm = (cache != nullptr && cache->p.rows() == a.rows()) ? &cache->p : nullptr;
                   DareResult sol = solve_dare(a, k.q, k.r, {}, warm);
                   Vector out = riccati_gain(a, k.r, sol.p) * x;
                   if (cache != nullptr) {
                     cache->a_block = a;
                     cache->p = std::move(sol.p);
                     ++cache->solves;
                   }
                   return out;
                 },
                 [&](const CustomPolicy& k) -> Vector { return k.fn(theta, x); }},
      mech.kind());
}

Matrix sample_in_set(const ParameterSet& set, int n, int m, Rng& rng) {
  Matrix g(n + m, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  const double reach = std::visit(Overloaded{[](const FrobeniusBall& b) { return b.radius; },
                                             [](const BlockOperatorBalls& b) { return std::max(b.radius_a, b.radius_b); }},
                                  set.kind());
  const double norm = g.norm();
  if (norm > 0.0) g *= rng.uniform(0.0, 1.5) * reach / norm;
  return set.euclidean_projection(g, n);
}

}  // namespace

double gain_value(const GainFamily& gain, const ParameterMatrix& theta) {
  return std::visit(Overloaded{[](const ConstantGain& g) { return g.kappa0; },
                               [&](const AffineNormGain& g) { return g.c1 * theta.frobenius_norm() + g.c2; }},
                    gain);
}

PolicyMechanism PolicyMechanism::pinning(double leader, GainFamily gain, Vector pin_pattern) {
  if (!std::isfinite(leader)) throw DomainError("leader opinion must be finite");
  if (pin_pattern.size() == 0 || !pin_pattern.allFinite()) throw DomainError("pin pattern must be a finite vector");
  const bool constant = std::holds_alternative<ConstantGain>(gain);
  PolicyMechanism mech(PinningLeader{leader, gain, std::move(pin_pattern)});
  mech.lipschitz_ = 0.0;
  // An affine-in-||theta|| gain is not bounded by L1 ||t1 - t2|| ||x|| as x -> 0.
  if (constant) mech.param_lipschitz_ = 0.0;
  return mech;
}

PolicyMechanism PolicyMechanism::riccati(Matrix q, Matrix r, InputLift lift) {
  if (q.rows() != q.cols() || r.rows() != r.cols() || q.rows() != r.rows()) {
    throw DimensionError("Q and R must be square of equal order");
  }
  check_weights(q, r);
  return PolicyMechanism(RiccatiFeedback{std::move(q), std::move(r), lift});
}

PolicyMechanism PolicyMechanism::custom(std::function<Vector(const ParameterMatrix&, const Vector&)> fn, int input_dim,
                                        std::optional<double> lipschitz, std::optional<double> param_lipschitz) {
  if (!fn) throw PreconditionError("custom policy needs a callable");
  if (input_dim <= 0) throw DimensionError("custom policy input dimension must be positive");
  PolicyMechanism mech(CustomPolicy{std::move(fn)});
  mech.custom_dim_ = input_dim;
  mech.lipschitz_ = lipschitz;
  mech.param_lipschitz_ = param_lipschitz;
  return mech;
}

PolicyMechanism PolicyMechanism::zero(int input_dim) {
  return custom([input_dim](const ParameterMatrix&, const Vector&) { return Vector::Zero(input_dim).eval(); },
                input_dim, 0.0, 0.0);
}

std::string PolicyMechanism::kind_name() const {
  return std::visit(Overloaded{[](const PinningLeader&) { return std::string("pinning_leader"); },
                               [](const RiccatiFeedback&) { return std::string("riccati_feedback"); },
                               [](const CustomPolicy&) { return std::string("custom"); }},
                    kind_);
}

int PolicyMechanism::input_dim(int n) const {
  return std::visit(Overloaded{[](const PinningLeader& k) { return static_cast<int>(k.pin_pattern.size()); },
                               [n](const RiccatiFeedback& k) {
                                 return k.lift == InputLift::kIdentity ? n : n + monomial_count(n);
                               },
                               [this](const CustomPolicy&) { return custom_dim_; }},
                    kind_);
}

std::vector<int> PolicyMechanism::probe_channels(int n) const {
  const int m = input_dim(n);
  const int first = std::holds_alternative<RiccatiFeedback>(kind_) ? m - n : 0;
  std::vector<int> out;
  for (int i = first; i < m; ++i) out.push_back(i);
  return out;
}

Vector lift_input(InputLift lift, const Vector& x, const Vector& ubar) {
  if (lift == InputLift::kIdentity) return ubar;
  const auto n = x.size();
  Vector u(monomial_count(static_cast<int>(n)) + ubar.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) u(k++) = x(i) * x(i);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) u(k++) = x(i) * x(j);
  u.tail(ubar.size()) = ubar;
  return u;
}

Vector policy_eval(const PolicyMechanism& mech, const ParameterMatrix& theta, const Vector& x,
                   const ParameterSet* domain, RiccatiCache* cache) {
  if (!x.allFinite()) throw DomainError("policy_eval: non-finite state");
  if (x.size() != theta.n()) throw DimensionError("policy_eval: state dimension differs from theta");
  if (domain != nullptr && !domain->contains(theta)) {
    throw PreconditionError("policy_eval: theta lies outside the parameter set");
  }
  const Vector ubar = raw_feedback(mech, theta, x, cache);
  Vector u = ubar;
  if (const auto* r = std::get_if<RiccatiFeedback>(&mech.kind())) u = lift_input(r->lift, x, ubar);
  if (u.size() != mech.input_dim(theta.n())) throw DimensionError("policy returned an input of the wrong length");
  if (theta.m() != u.size()) throw DimensionError("policy input length differs from theta's input block");
  return u;
}

void validate_policy(const PolicyMechanism& mech, const ParameterSet& set, int n, Rng& rng, int pairs) {
  const auto& lip = mech.lipschitz();
  const auto& lip1 = mech.param_lipschitz();
  if (!lip && !lip1) return;
  const int m = mech.input_dim(n);
  for (int k = 0; k < pairs; ++k) {
    const ParameterMatrix t1(sample_in_set(set, n, m, rng), n, m);
    Vector x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x(i) = 3.0 * rng.normal();
      y(i) = 3.0 * rng.normal();
    }
    const Vector ux = policy_eval(mech, t1, x);
    if (lip) {
      const double gap = (ux - policy_eval(mech, t1, y)).norm();
      if (gap > *lip * (x - y).norm() + 1e-9) {
        std::ostringstream msg;
        msg << "declared Lipschitz constant " << *lip << " violated: ||pi(x)-pi(y)|| = " << gap
            << " > L ||x-y|| = " << *lip * (x - y).norm();
        throw ContractError(msg.str());
      }
    }
    if (lip1) {
      const ParameterMatrix t2(sample_in_set(set, n, m, rng), n, m);
      const double gap = (ux - policy_eval(mech, t2, x)).norm();
      const double allowed = *lip1 * (t1.entries() - t2.entries()).norm() * x.norm();
      if (gap > allowed + 1e-9) {
        std::ostringstream msg;
        msg << "declared parameter Lipschitz constant " << *lip1 << " violated: gap " << gap << " > " << allowed;
        throw ContractError(msg.str());
      }
    }
  }
}

Matrix riccati_map(const Matrix& a, const Matrix& q, const Matrix& r, const Matrix& p) {
  const Matrix pa = p * a;
  Matrix out = a.transpose() * pa - pa.transpose() * (r + p).ldlt().solve(pa) + q;
  return 0.5 * (out + out.transpose());
}

double dare_residual(const Matrix& a, const Matrix& q, const Matrix& r, const Matrix& p) {
  return (p - riccati_map(a, q, r, p)).cwiseAbs().rowwise().sum().maxCoeff();
}

DareResult solve_dare(const Matrix& a, const Matrix& q, const Matrix& r, const DareOptions& options,
                      const Matrix* warm) {
  const auto n = a.rows();
  check_square(a, n, "A");
  check_square(q, n, "Q");
  check_square(r, n, "R");
  if (!a.allFinite()) throw DomainError("solve_dare: A must be finite");
  check_weights(q, r);
  if (!(options.tolerance > 0.0)) throw DomainError("solve_dare: tolerance must be positive");

  Matrix p = (warm != nullptr && warm->rows() == n && warm->cols() == n) ? *warm : q;
  std::deque<double> tail;
  for (std::size_t it = 0; it <= options.max_iterations; ++it) {
    Matrix next = riccati_map(a, q, r, p);
    const double res = (p - next).cwiseAbs().rowwise().sum().maxCoeff();
    tail.push_back(res);
    if (tail.size() > 10) tail.pop_front();
    if (!std::isfinite(res)) throw ConvergenceError("solve_dare: iteration produced non-finite values", p, res);
    if (res <= options.tolerance) {
      return {std::move(p), res, it, std::vector<double>(tail.begin(), tail.end())};
    }
    p = std::move(next);
  }
  throw ConvergenceError("solve_dare: iteration cap reached", p, tail.back());
}

double ProbingSignal::bound() const {
  return distribution == ProbeDistribution::kUniformCube ? half_width : std::sqrt(3.0);
}

Vector probe_sample(const ProbingSignal& sig, std::uint64_t t, Rng& rng) {
  Vector eps = Vector::Zero(sig.dim);
  const double h = sig.bound();
  if (h <= 0.0) return eps;
  for (int i = 0; i < sig.dim; ++i) eps(i) = rng.uniform(-h, h);
  if (sig.decay_b == 0.0) return eps;
  return std::pow(static_cast<double>(t) + 1.0, -sig.decay_b) * eps;
}

AdaptiveInput adaptive_input(const PolicyMechanism& mech, const ParameterMatrix& theta_hat_prev, const Vector& x,
                             const ProbingSignal& sig, std::uint64_t t, Rng& rng, const ParameterSet* domain,
                             RiccatiCache* cache) {
  const int n = theta_hat_prev.n();
  const auto channels = mech.probe_channels(n);
  if (static_cast<int>(channels.size()) != sig.dim) {
    throw DimensionError("probe dimension " + std::to_string(sig.dim) + " differs from the " +
                         std::to_string(channels.size()) + " probe channels of the policy");
  }
  if (domain != nullptr && !domain->contains(theta_hat_prev)) {
    throw PreconditionError("adaptive_input: estimate lies outside the parameter set");
  }
  if (x.size() != n || !x.allFinite()) throw DomainError("adaptive_input: bad state");
  const Vector eps = probe_sample(sig, t, rng);
  Vector ubar = raw_feedback(mech, theta_hat_prev, x, cache);
  ubar += eps;
  AdaptiveInput out;
  if (const auto* r = std::get_if<RiccatiFeedback>(&mech.kind())) {
    out.u = lift_input(r->lift, x, ubar);
  } else {
    out.u = std::move(ubar);
  }
  if (out.u.size() != theta_hat_prev.m()) throw DimensionError("policy input length differs from theta's input block");
  out.v = Vector::Zero(out.u.size());
  for (std::size_t i = 0; i < channels.size(); ++i) out.v(channels[i]) = eps(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace nadac
