#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace nadac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct IdentityLink {};

/// z -> a * tanh(z)
struct ScaledTanhLink {
  double scale = 1.0;
};

/// z -> 1 / (1 + exp(-z))
struct SigmoidLink {};

/// z -> max(slope * z, z), slope in (0, 1)
struct LeakyReluLink {
  double slope = 0.1;
};

/// z -> 1 - F(-z) with F the standard normal cdf (firing probability of a
/// noisy threshold neuron).
struct GaussianSurvivalLink {};

/// z -> E[clamp(z + eta, 0, cap)], eta ~ N(0, sigma^2).
struct SmoothedClampLink {
  double cap = 1.0;
  double sigma = 1.0;
};

/// One scalar map together with caller-certified derivative bounds on [-c, c].
struct ScalarComponent {
  std::function<double(double)> value;
  std::function<double(double)> slope_lower;
  std::function<double(double)> slope_upper;
};

struct CustomComponentwiseLink {
  std::vector<ScalarComponent> components;
};

using LinkKind = std::variant<IdentityLink, ScaledTanhLink, SigmoidLink, LeakyReluLink, GaussianSurvivalLink,
                              SmoothedClampLink, CustomComponentwiseLink>;

/// Componentwise nonlinearity f: R^n -> R^n with radius-dependent monotonicity
/// modulus alpha(c) and Lipschitz envelope beta(c). Immutable once built.
class LinkFunction {
 public:
  static LinkFunction identity(int dim);
  static LinkFunction scaled_tanh(int dim, double scale);
  static LinkFunction sigmoid(int dim);
  static LinkFunction leaky_relu(int dim, double slope);
  static LinkFunction gaussian_survival(int dim);
  static LinkFunction smoothed_clamp(int dim, double cap, double sigma);
  /// Verifies the supplied slope bounds against sampled finite differences and
  /// throws ContractError if they are violated.
  static LinkFunction custom(std::vector<ScalarComponent> components, bool bounded);

  int dim() const { return dim_; }
  bool bounded() const { return bounded_; }
  const LinkKind& kind() const { return kind_; }
  std::string kind_name() const;

  double component(int i, double z) const;

 private:
  LinkFunction(int dim, LinkKind kind, bool bounded);

  int dim_;
  LinkKind kind_;
  bool bounded_;
};

Vector eval(const LinkFunction& f, const Vector& z);

/// Envelope values below this break the positive-slope contract in strict mode.
inline constexpr double kAlphaContractFloor = 1e-14;
/// Lower clamp applied to every returned alpha value.
inline constexpr double kAlphaClamp = 1e-300;

enum class EnvelopeFloor {
  kStrict,  // throw ContractError when alpha(c) < kAlphaContractFloor
  kClamp,   // return max(alpha(c), kAlphaClamp)
};

double alpha_env(const LinkFunction& f, double radius, EnvelopeFloor floor = EnvelopeFloor::kStrict);
double beta_env(const LinkFunction& f, double radius);

double gaussian_cdf(double y, double sigma);
double gaussian_pdf(double y, double sigma);

/// Closed form of E[clamp(z + eta, 0, cap)] for eta ~ N(0, sigma^2).
double smoothed_clamp_value(double cap, double sigma, double z);
/// Its derivative G(cap - z) - G(-z).
double smoothed_clamp_slope(double cap, double sigma, double z);

/// Tagged-object form, e.g. {"kind":"scaled_tanh","a":2.0}. Custom links are not serializable.
nlohmann::json link_to_json(const LinkFunction& f);

}  // namespace nadac
