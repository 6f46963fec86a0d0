#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nadac/maps.hpp"

namespace nadac {

struct RunRecord;

/// Optional stage cost c(x, u) used for the Lipschitz-cost regret.
struct StageCost {
  std::string name;
  std::function<double(const Vector&, const Vector&)> fn;
  double lipschitz = 0.0;
};

StageCost constant_cost(double value);
StageCost state_coordinate_cost(int index);
/// min(||x||^2 + ||u||^2, clip): Lipschitz on bounded sets.
StageCost clipped_quadratic_cost(double clip);

/// Everything one step contributes to the running diagnostics. Reference
/// quantities are absent in open-loop runs; prediction terms need theta*.
struct MetricSample {
  Vector phi;
  Vector x;
  Vector u;
  const Vector* xstar = nullptr;
  const Vector* ustar = nullptr;
  std::optional<double> psi_sq;  // ||f(theta*' phi) - f(theta_hat' phi)||^2
  double mu = 1.0;
  double a = 1.0;
};

/// Running sums behind lambda_t, J_t, sign regret, prediction regret and the
/// moment diagnostics. Every sum is over the steps absorbed so far.
class MetricAccumulator {
 public:
  MetricAccumulator(int n, int m, double gamma, std::optional<StageCost> cost = std::nullopt);

  void absorb(const MetricSample& s);

  std::uint64_t count() const { return count_; }
  const Matrix& gram_normalized() const { return gram_; }
  double sum_phi_sq() const { return sum_phi_sq_; }

  /// Smallest eigenvalue of the symmetrized normalized Gram matrix.
  double lambda_min_normalized() const;
  /// Average over absorbed steps of ||x - x*||^2 + ||u - u*||^2.
  double tracking_error() const;
  double sign_regret() const;
  /// Sum of mu^{-1} ||psi||^2. Throws GroundTruthRequired without theta*.
  double prediction_regret() const;
  /// Sum of a ||psi||^2 (Lyapunov companion term).
  double weighted_prediction_sum() const;
  double stage_cost_regret() const;

  double mean_state_sq() const;
  double mean_state_pow_gamma() const;
  double mean_regressor_pow_gamma() const;
  double gamma() const { return gamma_; }

 private:
  int n_;
  int m_;
  double gamma_;
  std::optional<StageCost> cost_;
  std::uint64_t count_ = 0;
  std::uint64_t tracked_ = 0;
  Matrix gram_;
  double sum_phi_sq_ = 0.0;
  double sum_x_sq_ = 0.0;
  double sum_x_pow_gamma_ = 0.0;
  double sum_phi_pow_gamma_ = 0.0;
  double sum_track_sq_ = 0.0;
  double sum_sign_mismatch_ = 0.0;
  double sum_stage_cost_ = 0.0;
  std::optional<double> sum_pred_regret_;
  double sum_lyap_ = 0.0;
};

double lambda_min_normalized(const MetricAccumulator& acc);
double tracking_error(const MetricAccumulator& acc);
double sign_regret(const MetricAccumulator& acc);
double prediction_regret(const MetricAccumulator& acc);
double stage_cost_regret(const MetricAccumulator& acc);

/// sgn with sgn(0) = 0.
double sign0(double v);

/// Smallest eigenvalue of an explicitly symmetrized matrix.
double symmetric_lambda_min(const Matrix& m);

/// tr[(theta* - theta)' P^{-1} (theta* - theta)].
double lyapunov_value(const Matrix& theta_star, const Matrix& theta_hat, const Matrix& p_matrix);

/// sum ||x_{t+1}||^g / (sum ||v_t||^g + sum ||w_{t+1}||^g + 1) over a record.
double empirical_gain_ratio(const RunRecord& record, double gamma);

/// Open admissible interval (8b/(g-2), 2(g-2)/(g(g+2))) for the closed-loop rate exponent.
std::optional<std::pair<double, double>> eta_interval(double b, double gamma);
/// Midpoint of eta_interval; throws PreconditionError when it is empty.
double default_eta(double b, double gamma);

/// err^2 * lambda / (log r)^{1+delta}
double open_loop_rate_probe(double param_err, double lambda, double log_r, double delta);
/// err^2 * t^{1-2b-eta} / (log t)^{1+delta}
double closed_loop_rate_probe(double param_err, double t, double b, double eta, double delta);

double median(std::vector<double> values);

/// Median of the last half compared with `factor` times the median of the first half.
bool plateaus(const std::vector<double>& series, double factor);

struct ContractionFit {
  double m0 = 1.0;
  double rho0 = 1.0;
  std::size_t points = 0;
};

/// Fits dist_t <= M0 rho0^t dist_0 to a distance series with dist_0 > 0.
ContractionFit fit_contraction(const std::vector<double>& distances);

}  // namespace nadac
