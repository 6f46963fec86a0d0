#include "nadac/maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nadac/errors.hpp"

namespace nadac {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_dim(int dim) {
  if (dim <= 0) throw DomainError("link dimension must be positive");
}

// Upper tail 1 - G(y) for N(0, sigma^2), accurate far into the tail.
double gaussian_tail(double y, double sigma) { return 0.5 * std::erfc(y / (sigma * M_SQRT2)); }

// G(hi) - G(lo) for hi >= lo without cancellation in either tail.
double gaussian_mass(double lo, double hi, double sigma) {
  if (lo >= 0.0) return gaussian_tail(lo, sigma) - gaussian_tail(hi, sigma);
  if (hi <= 0.0) return gaussian_cdf(hi, sigma) - gaussian_cdf(lo, sigma);
  return 1.0 - gaussian_cdf(lo, sigma) - gaussian_tail(hi, sigma);
}

double tanh_slope_bound(double scale, double radius) {
  // a * sech^2(c) = 4a / (e^c + e^-c)^2, written to survive large c.
  const double t = std::exp(-2.0 * radius);
  return 4.0 * scale * t / ((1.0 + t) * (1.0 + t));
}

double sigmoid_slope_bound(double radius) {
  const double t = std::exp(-radius);
  return t / ((1.0 + t) * (1.0 + t));
}

void verify_custom_component(const ScalarComponent& comp, std::size_t index) {
  if (!comp.value || !comp.slope_lower || !comp.slope_upper) {
    throw ContractError("custom link component " + std::to_string(index) + " is missing a callback");
  }
  constexpr double kStep = 1e-5;
  constexpr double kTol = 1e-6;
  constexpr int kSamples = 201;
  double prev_lower = std::numeric_limits<double>::infinity();
  double prev_upper = 0.0;
  for (double radius : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double lower = comp.slope_lower(radius);
    const double upper = comp.slope_upper(radius);
    std::ostringstream where;
    where << "custom link component " << index << " at radius " << radius;
    if (!(lower > 0.0) || !(upper >= lower) || !std::isfinite(upper)) {
      throw ContractError(where.str() + ": need 0 < lower <= upper < inf");
    }
    if (lower > prev_lower + kTol || upper + kTol < prev_upper) {
      throw ContractError(where.str() + ": lower bound must be nonincreasing and upper nondecreasing");
    }
    prev_lower = lower;
    prev_upper = upper;
    for (int k = 0; k < kSamples; ++k) {
      const double z = -radius + 2.0 * radius * k / (kSamples - 1);
      const double fd = (comp.value(z + kStep) - comp.value(z - kStep)) / (2.0 * kStep);
      if (fd < lower - kTol || fd > upper + kTol) {
        std::ostringstream msg;
        msg << where.str() << ": finite-difference slope " << fd << " at z=" << z << " outside [" << lower << ", "
            << upper << "]";
        throw ContractError(msg.str());
      }
    }
  }
}

}  // namespace

LinkFunction::LinkFunction(int dim, LinkKind kind, bool bounded) : dim_(dim), kind_(std::move(kind)), bounded_(bounded) {}

LinkFunction LinkFunction::identity(int dim) {
  require_dim(dim);
  return {dim, IdentityLink{}, false};
}

LinkFunction LinkFunction::scaled_tanh(int dim, double scale) {
  require_dim(dim);
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("scaled_tanh: scale a must be positive");
  return {dim, ScaledTanhLink{scale}, true};
}

LinkFunction LinkFunction::sigmoid(int dim) {
  require_dim(dim);
  return {dim, SigmoidLink{}, true};
}

LinkFunction LinkFunction::leaky_relu(int dim, double slope) {
  require_dim(dim);
  if (!(slope > 0.0 && slope < 1.0)) throw DomainError("leaky_relu: slope b must lie in (0, 1)");
  return {dim, LeakyReluLink{slope}, false};
}

LinkFunction LinkFunction::gaussian_survival(int dim) {
  require_dim(dim);
  return {dim, GaussianSurvivalLink{}, true};
}

LinkFunction LinkFunction::smoothed_clamp(int dim, double cap, double sigma) {
  require_dim(dim);
  if (!(cap > 0.0) || !std::isfinite(cap)) throw DomainError("smoothed_clamp: N must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("smoothed_clamp: sigma must be positive");
  return {dim, SmoothedClampLink{cap, sigma}, true};
}

LinkFunction LinkFunction::custom(std::vector<ScalarComponent> components, bool bounded) {
  if (components.empty()) throw DomainError("custom link needs at least one component");
  for (std::size_t i = 0; i < components.size(); ++i) verify_custom_component(components[i], i);
  const int dim = static_cast<int>(components.size());
  return {dim, CustomComponentwiseLink{std::move(components)}, bounded};
}

std::string LinkFunction::kind_name() const {
  return std::visit(Overloaded{[](const IdentityLink&) { return "identity"; },
                               [](const ScaledTanhLink&) { return "scaled_tanh"; },
                               [](const SigmoidLink&) { return "sigmoid"; },
                               [](const LeakyReluLink&) { return "leaky_relu"; },
                               [](const GaussianSurvivalLink&) { return "gaussian_survival"; },
                               [](const SmoothedClampLink&) { return "smoothed_clamp"; },
                               [](const CustomComponentwiseLink&) { return "custom"; }},
                    kind_);
}

double LinkFunction::component(int i, double z) const {
  return std::visit(Overloaded{[&](const IdentityLink&) { return z; },
                               [&](const ScaledTanhLink& k) { return k.scale * std::tanh(z); },
                               [&](const SigmoidLink&) {
                                 // Branch keeps exp() from overflowing for very negative z.
                                 if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
                                 const double e = std::exp(z);
                                 return e / (1.0 + e);
                               },
                               [&](const LeakyReluLink& k) { return z >= 0.0 ? z : k.slope * z; },
                               [&](const GaussianSurvivalLink&) { return 1.0 - gaussian_cdf(-z, 1.0); },
                               [&](const SmoothedClampLink& k) { return smoothed_clamp_value(k.cap, k.sigma, z); },
                               [&](const CustomComponentwiseLink& k) { return k.components[i].value(z); }},
                    kind_);
}

Vector eval(const LinkFunction& f, const Vector& z) {
  if (z.size() != f.dim()) throw DimensionError("link eval: input has wrong dimension");
  if (!z.allFinite()) throw DomainError("link eval: non-finite input");
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = f.component(static_cast<int>(i), z[i]);
  return out;
}

double alpha_env(const LinkFunction& f, double radius, EnvelopeFloor floor) {
  if (!(radius >= 0.0)) throw DomainError("alpha_env: radius must be nonnegative");
  const double value = std::visit(
      Overloaded{[](const IdentityLink&) { return 1.0; },
                 [&](const ScaledTanhLink& k) { return tanh_slope_bound(k.scale, radius); },
                 [&](const SigmoidLink&) { return sigmoid_slope_bound(radius); },
                 [](const LeakyReluLink& k) { return k.slope; },
                 [&](const GaussianSurvivalLink&) { return gaussian_pdf(radius, 1.0); },
                 [&](const SmoothedClampLink& k) {
                   // The slope is unimodal with its peak at cap/2, so its minimum
                   // over [-c, c] sits at an endpoint.
                   return std::min(smoothed_clamp_slope(k.cap, k.sigma, -radius),
                                   smoothed_clamp_slope(k.cap, k.sigma, radius));
                 },
                 [&](const CustomComponentwiseLink& k) {
                   double lo = std::numeric_limits<double>::infinity();
                   for (const auto& c : k.components) lo = std::min(lo, c.slope_lower(radius));
                   return lo;
                 }},
      f.kind());
  if (std::isnan(value) || value < 0.0) throw ContractError("alpha_env: envelope is not positive");
  if (floor == EnvelopeFloor::kStrict && value < kAlphaContractFloor) {
    std::ostringstream msg;
    msg << "alpha_env: monotonicity modulus " << value << " at radius " << radius << " for link '" << f.kind_name()
        << "' is below " << kAlphaContractFloor;
    throw ContractError(msg.str());
  }
  return std::max(value, kAlphaClamp);
}

double beta_env(const LinkFunction& f, double radius) {
  if (!(radius >= 0.0)) throw DomainError("beta_env: radius must be nonnegative");
  const double value =
      std::visit(Overloaded{[](const IdentityLink&) { return 1.0; },
                            [](const ScaledTanhLink& k) { return k.scale; },
                            [](const SigmoidLink&) { return 0.25; },
                            [](const LeakyReluLink&) { return 1.0; },
                            [](const GaussianSurvivalLink&) { return kInvSqrt2Pi; },
                            [&](const SmoothedClampLink& k) {
                              const double mid = 0.5 * k.cap;
                              if (mid <= radius) return smoothed_clamp_slope(k.cap, k.sigma, mid);
                              return std::max(smoothed_clamp_slope(k.cap, k.sigma, -radius),
                                              smoothed_clamp_slope(k.cap, k.sigma, radius));
                            },
                            [&](const CustomComponentwiseLink& k) {
                              double hi = 0.0;
                              for (const auto& c : k.components) hi = std::max(hi, c.slope_upper(radius));
                              return hi;
                            }},
                 f.kind());
  if (!(value > 0.0) || !std::isfinite(value)) throw ContractError("beta_env: envelope is not finite and positive");
  return value;
}

double gaussian_cdf(double y, double sigma) { return 0.5 * std::erfc(-y / (sigma * M_SQRT2)); }

double gaussian_pdf(double y, double sigma) {
  const double s = y / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * s * s);
}

double smoothed_clamp_value(double cap, double sigma, double z) {
  if (!std::isfinite(z) || !std::isfinite(cap) || !std::isfinite(sigma)) {
    throw DomainError("smoothed_clamp_value: non-finite input");
  }
  if (!(cap > 0.0) || !(sigma > 0.0)) throw DomainError("smoothed_clamp_value: need N > 0 and sigma > 0");
  const double value = cap - z * gaussian_cdf(-z, sigma) - (cap - z) * gaussian_cdf(cap - z, sigma) +
                       sigma * sigma * (gaussian_pdf(-z, sigma) - gaussian_pdf(cap - z, sigma));
  // Rounding can push the far tails a few ulps outside [0, N].
  return std::clamp(value, 0.0, cap);
}

double smoothed_clamp_slope(double cap, double sigma, double z) { return gaussian_mass(-z, cap - z, sigma); }

nlohmann::json link_to_json(const LinkFunction& f) {
  using nlohmann::json;
  return std::visit(Overloaded{[](const IdentityLink&) { return json{{"kind", "identity"}}; },
                               [](const ScaledTanhLink& k) { return json{{"kind", "scaled_tanh"}, {"a", k.scale}}; },
                               [](const SigmoidLink&) { return json{{"kind", "sigmoid"}}; },
                               [](const LeakyReluLink& k) { return json{{"kind", "leaky_relu"}, {"b", k.slope}}; },
                               [](const GaussianSurvivalLink&) { return json{{"kind", "gaussian_survival"}}; },
                               [](const SmoothedClampLink& k) {
                                 return json{{"kind", "smoothed_clamp"}, {"N", k.cap}, {"sigma", k.sigma}};
                               },
                               [](const CustomComponentwiseLink&) -> json {
                                 throw ValidationError("link", "custom links cannot be serialized");
                               }},
                    f.kind());
}

}  // namespace nadac
