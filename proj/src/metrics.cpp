#include "nadac/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "nadac/errors.hpp"
#include "nadac/simulate.hpp"

namespace nadac {

StageCost constant_cost(double value) {
  return {"constant", [value](const Vector&, const Vector&) { return value; }, 0.0};
}

StageCost state_coordinate_cost(int index) {
  if (index < 0) throw DomainError("stage cost coordinate must be nonnegative");
  return {"state_coordinate",
          [index](const Vector& x, const Vector&) {
            if (index >= x.size()) throw DimensionError("stage cost coordinate exceeds the state dimension");
            return x(index);
          },
          1.0};
}

StageCost clipped_quadratic_cost(double clip) {
  if (!(clip > 0.0)) throw DomainError("clip level must be positive");
  return {"clipped_quadratic",
          [clip](const Vector& x, const Vector& u) { return std::min(x.squaredNorm() + u.squaredNorm(), clip); },
          2.0 * std::sqrt(clip)};
}

MetricAccumulator::MetricAccumulator(int n, int m, double gamma, std::optional<StageCost> cost)
    : n_(n), m_(m), gamma_(gamma), cost_(std::move(cost)), gram_(Matrix::Zero(n + m, n + m)) {
  if (!(gamma > 0.0)) throw DomainError("moment order gamma must be positive");
}

void MetricAccumulator::absorb(const MetricSample& s) {
  if (s.phi.size() != n_ + m_) throw DimensionError("metric sample regressor has the wrong length");
  const double phi_sq = s.phi.squaredNorm();
  gram_.noalias() += (s.phi * s.phi.transpose()) / (1.0 + phi_sq);
  sum_phi_sq_ += phi_sq;
  const double x_sq = s.x.squaredNorm();
  sum_x_sq_ += x_sq;
  sum_x_pow_gamma_ += std::pow(x_sq, 0.5 * gamma_);
  sum_phi_pow_gamma_ += std::pow(phi_sq, 0.5 * gamma_);
  if (s.xstar != nullptr && s.ustar != nullptr) {
    sum_track_sq_ += (s.x - *s.xstar).squaredNorm() + (s.u - *s.ustar).squaredNorm();
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      sum_sign_mismatch_ += std::abs(sign0(s.x(i)) - sign0((*s.xstar)(i)));
    }
    if (cost_) {
      const double diff = cost_->fn(s.x, s.u) - cost_->fn(*s.xstar, *s.ustar);
      sum_stage_cost_ += diff * diff;
    }
    ++tracked_;
  }
  if (s.psi_sq) {
    sum_pred_regret_ = sum_pred_regret_.value_or(0.0) + *s.psi_sq / s.mu;
    sum_lyap_ += s.a * *s.psi_sq;
  }
  ++count_;
}

double MetricAccumulator::lambda_min_normalized() const {
  if (count_ == 0) throw PreconditionError("lambda_min_normalized: no regressor absorbed");
  return symmetric_lambda_min(gram_);
}

double MetricAccumulator::tracking_error() const {
  if (tracked_ == 0) throw PreconditionError("tracking_error: no reference steps absorbed");
  return sum_track_sq_ / static_cast<double>(tracked_);
}

double MetricAccumulator::sign_regret() const {
  if (tracked_ == 0) throw PreconditionError("sign_regret: no reference steps absorbed");
  return sum_sign_mismatch_ / static_cast<double>(tracked_);
}

double MetricAccumulator::prediction_regret() const {
  if (!sum_pred_regret_) throw GroundTruthRequired("prediction_regret needs the true parameter");
  return *sum_pred_regret_;
}

double MetricAccumulator::weighted_prediction_sum() const {
  if (!sum_pred_regret_) throw GroundTruthRequired("the Lyapunov companion sum needs the true parameter");
  return sum_lyap_;
}

double MetricAccumulator::stage_cost_regret() const {
  if (!cost_) throw PreconditionError("stage_cost_regret: no stage cost configured");
  if (tracked_ == 0) throw PreconditionError("stage_cost_regret: no reference steps absorbed");
  return sum_stage_cost_ / static_cast<double>(tracked_);
}

double MetricAccumulator::mean_state_sq() const {
  return count_ == 0 ? 0.0 : sum_x_sq_ / static_cast<double>(count_);
}

double MetricAccumulator::mean_state_pow_gamma() const {
  return count_ == 0 ? 0.0 : sum_x_pow_gamma_ / static_cast<double>(count_);
}

double MetricAccumulator::mean_regressor_pow_gamma() const {
  return count_ == 0 ? 0.0 : sum_phi_pow_gamma_ / static_cast<double>(count_);
}

double lambda_min_normalized(const MetricAccumulator& acc) { return acc.lambda_min_normalized(); }
double tracking_error(const MetricAccumulator& acc) { return acc.tracking_error(); }
double sign_regret(const MetricAccumulator& acc) { return acc.sign_regret(); }
double prediction_regret(const MetricAccumulator& acc) { return acc.prediction_regret(); }
double stage_cost_regret(const MetricAccumulator& acc) { return acc.stage_cost_regret(); }

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double symmetric_lambda_min(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().minCoeff());
}

double lyapunov_value(const Matrix& theta_star, const Matrix& theta_hat, const Matrix& p_matrix) {
  const Matrix diff = theta_star - theta_hat;
  return (diff.transpose() * p_matrix.ldlt().solve(diff)).trace();
}

double empirical_gain_ratio(const RunRecord& record, double gamma) {
  double num = 0.0;
  double den = 1.0;
  for (std::size_t i = 0; i < record.rows.size(); ++i) {
    const StepRow& row = record.rows[i];
    if (i + 1 < record.rows.size()) num += std::pow(record.rows[i + 1].x.norm(), gamma);
    den += std::pow(row.v.norm(), gamma) + std::pow(row.w.norm(), gamma);
  }
  if (record.rows.empty()) return 0.0;
  if (record.final_state.size() > 0) num += std::pow(record.final_state.norm(), gamma);
  return num / den;
}

std::optional<std::pair<double, double>> eta_interval(double b, double gamma) {
  if (!(gamma > 2.0)) return std::nullopt;
  const double lo = 8.0 * b / (gamma - 2.0);
  const double hi = 2.0 * (gamma - 2.0) / (gamma * (gamma + 2.0));
  if (!(lo < hi)) return std::nullopt;
  return std::make_pair(lo, hi);
}

double default_eta(double b, double gamma) {
  const auto interval = eta_interval(b, gamma);
  if (!interval) {
    throw PreconditionError("no admissible eta for b=" + std::to_string(b) + ", gamma=" + std::to_string(gamma) +
                            "; raise gamma or lower b");
  }
  return 0.5 * (interval->first + interval->second);
}

double open_loop_rate_probe(double param_err, double lambda, double log_r, double delta) {
  return param_err * param_err * lambda / std::pow(log_r, 1.0 + delta);
}

double closed_loop_rate_probe(double param_err, double t, double b, double eta, double delta) {
  return param_err * param_err * std::pow(t, 1.0 - 2.0 * b - eta) / std::pow(std::log(t), 1.0 + delta);
}

double median(std::vector<double> values) {
  if (values.empty()) throw PreconditionError("median of an empty series");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

bool plateaus(const std::vector<double>& series, double factor) {
  if (series.size() < 2) throw PreconditionError("plateau check needs at least two points");
  const auto half = series.size() / 2;
  const std::vector<double> first(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<double> last(series.begin() + static_cast<std::ptrdiff_t>(half), series.end());
  return median(last) <= factor * median(first);
}

ContractionFit fit_contraction(const std::vector<double>& distances) {
  if (distances.empty() || !(distances.front() > 0.0)) {
    throw PreconditionError("contraction fit needs a positive initial distance");
  }
  const double d0 = distances.front();
  // Least-squares slope of log(d_t/d_0) against t over the resolvable prefix.
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t k = 0;
  for (std::size_t t = 0; t < distances.size(); ++t) {
    const double ratio = distances[t] / d0;
    if (!(ratio > 1e-12)) break;
    const double y = std::log(ratio);
    st += static_cast<double>(t);
    sy += y;
    stt += static_cast<double>(t) * static_cast<double>(t);
    sty += static_cast<double>(t) * y;
    ++k;
  }
  ContractionFit fit;
  fit.points = k;
  if (k >= 2) {
    const double kk = static_cast<double>(k);
    const double slope = (kk * sty - st * sy) / (kk * stt - st * st);
    fit.rho0 = std::exp(slope);
  } else {
    fit.rho0 = 1e-12;
  }
  fit.m0 = 1.0;
  for (std::size_t t = 0; t < distances.size(); ++t) {
    const double envelope = std::pow(fit.rho0, static_cast<double>(t));
    if (envelope <= 0.0) break;
    fit.m0 = std::max(fit.m0, distances[t] / (d0 * envelope));
  }
  return fit;
}

}  // namespace nadac
