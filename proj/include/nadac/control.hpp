#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "nadac/estimator.hpp"
#include "nadac/rng.hpp"

namespace nadac {

struct ConstantGain {
  double kappa0 = 1.0;
};

/// kappa(theta) = c1 * ||theta||_F + c2
struct AffineNormGain {
  double c1 = 0.0;
  double c2 = 1.0;
};

using GainFamily = std::variant<ConstantGain, AffineNormGain>;

double gain_value(const GainFamily& gain, const ParameterMatrix& theta);

/// State-independent leader input kappa(theta) * x_L on the pinned channels.
struct PinningLeader {
  double leader = 0.0;
  GainFamily gain;
  Vector pin_pattern;  // length m
};

enum class InputLift {
  kIdentity,             // u = ubar
  kQuadraticMonomials,   // u = [x_i^2 ..., x_i x_j (i<j) ..., ubar]
};

/// ubar = (R + P)^{-1} P A x with P solving the Riccati equation for the A-block.
struct RiccatiFeedback {
  Matrix q;
  Matrix r;
  InputLift lift = InputLift::kIdentity;
};

struct CustomPolicy {
  std::function<Vector(const ParameterMatrix&, const Vector&)> fn;
};

using PolicyKind = std::variant<PinningLeader, RiccatiFeedback, CustomPolicy>;

/// Warm-start cache for Riccati-based mechanisms. Per run, never shared.
struct RiccatiCache {
  Matrix a_block;
  Matrix p;
  std::uint64_t solves = 0;
  std::uint64_t reuses = 0;
};

/// A control design mechanism theta -> pi_theta(.).
class PolicyMechanism {
 public:
  static PolicyMechanism pinning(double leader, GainFamily gain, Vector pin_pattern);
  static PolicyMechanism riccati(Matrix q, Matrix r, InputLift lift);
  static PolicyMechanism custom(std::function<Vector(const ParameterMatrix&, const Vector&)> fn, int input_dim,
                                std::optional<double> lipschitz, std::optional<double> param_lipschitz);
  static PolicyMechanism zero(int input_dim);

  const PolicyKind& kind() const { return kind_; }
  std::string kind_name() const;

  /// Input dimension m for a state of dimension n.
  int input_dim(int n) const;

  /// Indices of u that carry the raw feedback (and hence the probe).
  std::vector<int> probe_channels(int n) const;

  /// Declared Lipschitz constant of x -> pi_theta(x), uniform over the set.
  const std::optional<double>& lipschitz() const { return lipschitz_; }
  /// Declared L1 of ||pi_t1(x) - pi_t2(x)|| <= L1 ||t1 - t2|| ||x||.
  const std::optional<double>& param_lipschitz() const { return param_lipschitz_; }

 private:
  explicit PolicyMechanism(PolicyKind kind) : kind_(std::move(kind)) {}

  PolicyKind kind_;
  int custom_dim_ = 0;
  std::optional<double> lipschitz_;
  std::optional<double> param_lipschitz_;
};

/// Lift the raw feedback ubar into the full input.
Vector lift_input(InputLift lift, const Vector& x, const Vector& ubar);

/// pi_theta(x). `domain`, when given, is checked for membership of theta.
/// `cache` lets Riccati mechanisms warm-start and skip repeated solves.
Vector policy_eval(const PolicyMechanism& mech, const ParameterMatrix& theta, const Vector& x,
                   const ParameterSet* domain = nullptr, RiccatiCache* cache = nullptr);

/// Checks the declared constants on `pairs` sampled (theta, x, x') triples.
/// Throws ContractError naming the first violated inequality.
void validate_policy(const PolicyMechanism& mech, const ParameterSet& set, int n, Rng& rng, int pairs = 10000);

struct DareOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 100000;
};

struct DareResult {
  Matrix p;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::vector<double> tail_residuals;  // the last (up to) ten residuals, oldest first
};

/// Right-hand side A'PA - A'P(R+P)^{-1}PA + Q.
Matrix riccati_map(const Matrix& a, const Matrix& q, const Matrix& r, const Matrix& p);

/// Infinity norm (max row sum) of P minus its Riccati image.
double dare_residual(const Matrix& a, const Matrix& q, const Matrix& r, const Matrix& p);

/// Fixed-point iteration P <- riccati_map(P) started from Q or `warm`.
DareResult solve_dare(const Matrix& a, const Matrix& q, const Matrix& r, const DareOptions& options = {},
                      const Matrix* warm = nullptr);

enum class ProbeDistribution {
  kUniformCube,          // eps_i ~ U[-h, h]
  kScaledIdentityCov,    // eps_i ~ U[-sqrt 3, sqrt 3], E[eps eps'] = I
};

/// v_t = (t+1)^{-b} eps_t.
struct ProbingSignal {
  double decay_b = 0.0;
  ProbeDistribution distribution = ProbeDistribution::kUniformCube;
  double half_width = 1.0;
  int dim = 1;

  /// sup ||eps||_inf; zero means probing is off.
  double bound() const;
};

Vector probe_sample(const ProbingSignal& sig, std::uint64_t t, Rng& rng);

struct AdaptiveInput {
  Vector u;
  Vector v;  // probe as it enters u (zeros outside the probe channels)
};

/// u = pi_{theta_prev}(x) + v with the probe added to the raw feedback
/// before any lifting.
AdaptiveInput adaptive_input(const PolicyMechanism& mech, const ParameterMatrix& theta_hat_prev, const Vector& x,
                             const ProbingSignal& sig, std::uint64_t t, Rng& rng,
                             const ParameterSet* domain = nullptr, RiccatiCache* cache = nullptr);

}  // namespace nadac
