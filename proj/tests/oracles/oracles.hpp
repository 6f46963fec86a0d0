#pragma once
// Reference computations that share no code with the library. Plain doubles
// and hand-written 2x2 algebra on purpose.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

inline double quad(const Mat2& m, const Vec2& v) {
  return v[0] * (m[0][0] * v[0] + m[0][1] * v[1]) + v[1] * (m[1][0] * v[0] + m[1][1] * v[1]);
}

inline Vec2 mul(const Mat2& m, const Vec2& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

inline Mat2 inverse(const Mat2& m) {
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return {{{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}}};
}

/// Weighted distance (x - y)' M (x - y) for a 2-vector parameter.
inline double wdist(const Mat2& m, const Vec2& x, const Vec2& y) { return quad(m, {x[0] - y[0], x[1] - y[1]}); }

/// Best weighted distance over the circle of radius r, sampled at `angles`
/// points. For x outside the disk the minimizer lies on that circle.
inline std::pair<double, Vec2> disk_boundary_search(const Mat2& m, const Vec2& x, double r, int angles) {
  double best = INFINITY;
  Vec2 arg{0, 0};
  for (int k = 0; k < angles; ++k) {
    const double th = 2.0 * M_PI * k / angles;
    const Vec2 y{r * std::cos(th), r * std::sin(th)};
    const double d = wdist(m, x, y);
    if (d < best) {
      best = d;
      arg = y;
    }
  }
  return {best, arg};
}

/// Dense grid over the disk at spacing h.
inline double disk_grid_search(const Mat2& m, const Vec2& x, double r, double h) {
  double best = INFINITY;
  for (double a = -r; a <= r; a += h)
    for (double b = -r; b <= r; b += h)
      if (a * a + b * b <= r * r) best = std::min(best, wdist(m, x, {a, b}));
  return best;
}

/// Scalar link for the transcription: value plus closed-form envelopes.
struct ScalarLink {
  std::function<double(double)> f;
  std::function<double(double)> alpha;
  std::function<double(double)> beta;
};

inline ScalarLink identity_link() {
  return {[](double z) { return z; }, [](double) { return 1.0; }, [](double) { return 1.0; }};
}

inline ScalarLink tanh_link(double a) {
  return {[a](double z) { return a * std::tanh(z); },
          [a](double c) {
            const double s = std::exp(c) + std::exp(-c);
            return 4.0 * a / (s * s);
          },
          [a](double) { return a; }};
}

/// Straight-line transcription of the recursion for n = m = 1 with
/// theta = (a, b)' in a Euclidean disk of radius R, projection target of
/// radius shrink * R. Weighted projection by bisection on the multiplier of
/// the 2x2 Lagrangian system.
struct ScalarEstimator {
  Vec2 theta{0, 0};
  Mat2 p{{{1, 0}, {0, 1}}};
  double r = 1.0;
  double delta = 0.5;
  double radius = 1.0;
  double shrink = 0.5;
  int projections = 0;

  struct Trace {
    double d, g, mu, a;
    bool projected;
  };

  Trace step(const ScalarLink& link, const Vec2& phi, double x_next) {
    r = r + phi[0] * phi[0] + phi[1] * phi[1];
    const double pred_arg = theta[0] * phi[0] + theta[1] * phi[1];
    const double c = std::abs(pred_arg) + radius * std::sqrt(phi[0] * phi[0] + phi[1] * phi[1]);
    const double d = 0.5 * link.alpha(c);
    const double g = link.beta(c);
    const double q = quad(p, phi);
    const double mu = std::pow(1.0 + std::log(r), 1.0 + delta) + d * g * g * q;
    const double a = 1.0 / (mu + d * d * q);
    const Vec2 pphi = mul(p, phi);
    Mat2 pn;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) pn[i][j] = p[i][j] - a * d * d * pphi[i] * pphi[j];
    const double sym = 0.5 * (pn[0][1] + pn[1][0]);
    pn[0][1] = pn[1][0] = sym;
    const Vec2 gain = mul(pn, phi);
    const double innov = x_next - link.f(pred_arg);
    Vec2 cand{theta[0] + d / mu * gain[0] * innov, theta[1] + d / mu * gain[1] * innov};
    bool projected = false;
    if (std::hypot(cand[0], cand[1]) > radius * (1.0 + 1e-12)) {
      cand = project(inverse(pn), cand, shrink * radius);
      ++projections;
      projected = true;
    }
    theta = cand;
    p = pn;
    return {d, g, mu, a, projected};
  }

  static Vec2 project(const Mat2& m, const Vec2& x, double rad) {
    auto y_of = [&](double lam) {
      Mat2 s{{{m[0][0] + lam, m[0][1]}, {m[1][0], m[1][1] + lam}}};
      return mul(inverse(s), mul(m, x));
    };
    double lo = 0.0, hi = 1.0;
    while (std::hypot(y_of(hi)[0], y_of(hi)[1]) > rad) hi *= 2.0;
    for (int it = 0; it < 300; ++it) {
      const double mid = 0.5 * (lo + hi);
      const Vec2 y = y_of(mid);
      if (std::hypot(y[0], y[1]) > rad) lo = mid; else hi = mid;
    }
    return y_of(hi);
  }
};

/// Positive root of p = a^2 p r / (r + p) + q, i.e. p^2 + p(r - a^2 r - q) - q r = 0.
inline double scalar_dare(double a, double q, double r) {
  const double b = r - a * a * r - q;
  return 0.5 * (-b + std::sqrt(b * b + 4.0 * q * r));
}

/// Monte-Carlo mean and standard error of clamp(z + eta, 0, cap), eta ~ N(0, sigma^2).
inline std::pair<double, double> clamp_monte_carlo(double cap, double sigma, double z, std::uint64_t samples,
                                                   std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  double sum = 0.0, sum_sq = 0.0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const double v = std::clamp(z + normal(gen), 0.0, cap);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

/// E clamp(z + eta, 0, cap) by composite Simpson on [-12 sigma, 12 sigma],
/// split at the two kinks so each piece is smooth.
inline double clamp_quadrature(double cap, double sigma, double z, int panels = 20000) {
  const double pi = 3.14159265358979323846;
  auto g = [&](double e) {
    const double v = std::clamp(z + e, 0.0, cap);
    return v * std::exp(-0.5 * e * e / (sigma * sigma)) / (sigma * std::sqrt(2.0 * pi));
  };
  const double reach = 12.0 * sigma;
  std::vector<double> cuts{-reach, reach};
  for (double k : {-z, cap - z}) {
    if (k > -reach && k < reach) cuts.push_back(k);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1], h = (b - a) / panels;
    double acc = g(a) + g(b);
    for (int j = 1; j < panels; ++j) acc += g(a + j * h) * (j % 2 == 1 ? 4.0 : 2.0);
    total += acc * h / 3.0;
  }
  return total;
}

/// Central finite difference.
inline double derivative(const std::function<double(double)>& f, double z, double h = 1e-5) {
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

/// Min and max of the finite-difference slope over a uniform grid on [-c, c].
inline std::pair<double, double> slope_range(const std::function<double(double)>& f, double c, int points) {
  double lo = INFINITY, hi = -INFINITY;
  for (int k = 0; k < points; ++k) {
    const double z = points == 1 ? 0.0 : -c + 2.0 * c * k / (points - 1);
    const double s = derivative(f, z);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return {lo, hi};
}

}  // namespace oracle
