#include <doctest.h>

#include <cmath>
#include <random>

#include "nadac/errors.hpp"
#include "nadac/maps.hpp"
#include "oracles/oracles.hpp"

using namespace nadac;

namespace {

std::vector<LinkFunction> all_builtin(int n) {
  return {LinkFunction::identity(n),           LinkFunction::scaled_tanh(n, 2.0),
          LinkFunction::sigmoid(n),            LinkFunction::leaky_relu(n, 0.3),
          LinkFunction::gaussian_survival(n),  LinkFunction::smoothed_clamp(n, 10.0, 1.0),
          LinkFunction::smoothed_clamp(n, 10.0, 5.0)};
}

Vector random_in_ball(std::mt19937_64& gen, int n, double c) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(gen);
  return v * (c * std::pow(unif(gen), 1.0 / n) / v.norm());
}

}  // namespace

TEST_CASE("eval: identity, tanh at zero, clamp limit") {
  const Vector z = (Vector(2) << 3, -1).finished();
  CHECK(eval(LinkFunction::identity(2), z) == z);
  CHECK(eval(LinkFunction::scaled_tanh(4, 2.0), Vector::Zero(4)).norm() == 0.0);
  const Vector y = eval(LinkFunction::smoothed_clamp(3, 10.0, 1e-9), (Vector(3) << -5, 4, 12).finished());
  CHECK(y(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(y(1) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(y(2) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("eval rejects non-finite input and wrong length") {
  Vector z(2);
  z << 1.0, NAN;
  CHECK_THROWS_AS(eval(LinkFunction::identity(2), z), DomainError);
  CHECK_THROWS_AS(eval(LinkFunction::identity(3), Vector::Zero(2)), DimensionError);
}

TEST_CASE("alpha_env closed forms") {
  CHECK(alpha_env(LinkFunction::scaled_tanh(1, 2.0), 0.0) == doctest::Approx(2.0));
  for (double c : {0.0, 1.0, 7.0, 50.0}) CHECK(alpha_env(LinkFunction::leaky_relu(3, 0.3), c) == 0.3);
  CHECK(alpha_env(LinkFunction::sigmoid(1), 1.5) ==
        doctest::Approx(std::exp(-1.5) / std::pow(1 + std::exp(-1.5), 2)).epsilon(1e-14));
  CHECK(alpha_env(LinkFunction::gaussian_survival(1), 2.0) ==
        doctest::Approx(std::exp(-2.0) / std::sqrt(2 * M_PI)).epsilon(1e-14));
  CHECK_THROWS_AS(alpha_env(LinkFunction::identity(1), -1.0), DomainError);
}

TEST_CASE("beta_env closed forms") {
  for (double c : {0.0, 3.0, 40.0}) {
    CHECK(beta_env(LinkFunction::sigmoid(2), c) == 0.25);
    CHECK(beta_env(LinkFunction::identity(2), c) == 1.0);
    CHECK(beta_env(LinkFunction::leaky_relu(2, 0.3), c) == 1.0);
    CHECK(beta_env(LinkFunction::scaled_tanh(2, 2.0), c) == 2.0);
    CHECK(beta_env(LinkFunction::gaussian_survival(2), c) == doctest::Approx(1 / std::sqrt(2 * M_PI)));
  }
}

TEST_CASE("smoothed clamp envelopes match finite differences of eval") {
  struct Case {
    double sigma, c;
  };
  for (const Case k : {Case{1.0, 2.0}, Case{5.0, 3.0}, Case{2.0, 6.0}, Case{10.0, 0.5}}) {
    const auto f = LinkFunction::smoothed_clamp(1, 10.0, k.sigma);
    const auto range = oracle::slope_range([&](double z) { return smoothed_clamp_value(10.0, k.sigma, z); }, k.c, 4001);
    CAPTURE(k.sigma);
    CAPTURE(k.c);
    CHECK(alpha_env(f, k.c) == doctest::Approx(range.first).epsilon(1e-6));
    CHECK(beta_env(f, k.c) == doctest::Approx(range.second).epsilon(1e-6));
  }
}

TEST_CASE("vanishing clamp slope trips the strict floor") {
  const auto f = LinkFunction::smoothed_clamp(1, 10.0, 1.0);
  CHECK_THROWS_AS(alpha_env(f, 8.0), ContractError);
  const double clamped = alpha_env(f, 8.0, EnvelopeFloor::kClamp);
  CHECK(clamped > 0.0);
  CHECK(clamped < kAlphaContractFloor);
}

TEST_CASE("smoothed_clamp_value: symmetry and zero-noise limit") {
  CHECK(smoothed_clamp_value(10.0, 1.0, 5.0) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(smoothed_clamp_value(10.0, 1e-9, -3.0) == doctest::Approx(0.0));
  for (double z : {-4.0, 0.0, 2.5, 7.0}) {
    CHECK(smoothed_clamp_value(10.0, 3.0, z) + smoothed_clamp_value(10.0, 3.0, 10.0 - z) ==
          doctest::Approx(10.0).epsilon(1e-13));
  }
  CHECK_THROWS_AS(smoothed_clamp_value(10.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(smoothed_clamp_value(10.0, 1.0, NAN), DomainError);
}

TEST_CASE("smoothed_clamp_value against quadrature") {
  for (double sigma : {0.5, 1.0, 5.0, 10.0}) {
    for (int k = 0; k <= 30; ++k) {
      const double z = -5.0 + 20.0 * k / 30.0;
      CAPTURE(sigma);
      CAPTURE(z);
      CHECK(std::abs(smoothed_clamp_value(10.0, sigma, z) - oracle::clamp_quadrature(10.0, sigma, z)) <= 1e-10);
    }
  }
}

TEST_CASE("smoothed_clamp_value against a Monte-Carlo mean on z in -10..20") {
  for (int zi = -10; zi <= 20; zi += 2) {
    const double z = zi;
    const auto [mean, se] = oracle::clamp_monte_carlo(10.0, 5.0, z, 1'000'000, 77 + static_cast<unsigned>(zi + 10));
    const double exact = smoothed_clamp_value(10.0, 5.0, z);
    CAPTURE(z);
    CHECK(std::abs(exact - mean) <= 4.0 * se + 1e-12);
    CHECK(exact > 0.0);
    CHECK(exact < 10.0);
  }
}

TEST_CASE("envelope soundness on random pairs") {
  std::mt19937_64 gen(2024);
  const int n = 3;
  for (const auto& f : all_builtin(n)) {
    for (double c : {0.5, 1.0, 5.0, 20.0}) {
      const double a = alpha_env(f, c, EnvelopeFloor::kClamp);
      const double b = beta_env(f, c);
      CHECK(a > 0.0);
      CHECK(a <= b);
      for (int k = 0; k < 2500; ++k) {
        const Vector x = random_in_ball(gen, n, c);
        const Vector y = random_in_ball(gen, n, c);
        const Vector df = eval(f, x) - eval(f, y);
        const double dist_sq = (x - y).squaredNorm();
        CAPTURE(f.kind_name());
        CAPTURE(c);
        REQUIRE((x - y).dot(df) >= a * dist_sq - 1e-9);
        REQUIRE(df.norm() <= b * std::sqrt(dist_sq) + 1e-9);
      }
    }
  }
}

TEST_CASE("envelopes are monotone in the radius") {
  for (const auto& f : all_builtin(2)) {
    double prev_a = INFINITY, prev_b = 0.0;
    for (double c = 0.0; c <= 30.0; c += 0.25) {
      const double a = alpha_env(f, c, EnvelopeFloor::kClamp);
      const double b = beta_env(f, c);
      CAPTURE(f.kind_name());
      CAPTURE(c);
      CHECK(a <= prev_a);
      CHECK(b >= prev_b);
      prev_a = a;
      prev_b = b;
    }
  }
}

TEST_CASE("bounded links keep alpha of the output radius away from zero") {
  for (const auto& f : all_builtin(2)) {
    if (!f.bounded()) continue;
    double inf_alpha = INFINITY, sup_beta = 0.0;
    for (double s = -200.0; s <= 200.0; s += 0.5) {
      const Vector z = Vector::Constant(2, s);
      const double r = eval(f, z).norm();
      inf_alpha = std::min(inf_alpha, alpha_env(f, r, EnvelopeFloor::kClamp));
      sup_beta = std::max(sup_beta, beta_env(f, r));
    }
    CAPTURE(f.kind_name());
    CHECK(inf_alpha > kAlphaClamp);  // strictly positive, not just the clamp
    CHECK(std::isfinite(sup_beta));
  }
}

TEST_CASE("finite-difference slope lies inside the envelope") {
  for (const auto& f : all_builtin(1)) {
    for (double c : {0.5, 2.0, 6.0}) {
      const auto range = oracle::slope_range([&](double z) { return f.component(0, z); }, c, 301);
      CAPTURE(f.kind_name());
      CHECK(range.first >= alpha_env(f, c, EnvelopeFloor::kClamp) - 1e-6);
      CHECK(range.second <= beta_env(f, c) + 1e-6);
    }
  }
}

TEST_CASE("strict floor raises a contract error, clamp mode does not") {
  const auto f = LinkFunction::scaled_tanh(1, 2.0);
  CHECK_THROWS_AS(alpha_env(f, 30.0), ContractError);
  const double clamped = alpha_env(f, 30.0, EnvelopeFloor::kClamp);
  CHECK(clamped > 0.0);
  CHECK(clamped < kAlphaContractFloor);
  CHECK(alpha_env(f, 1000.0, EnvelopeFloor::kClamp) == kAlphaClamp);
}

TEST_CASE("custom components are verified at construction") {
  ScalarComponent good{[](double z) { return 0.5 * z + 0.25 * std::tanh(z); },
                       [](double) { return 0.5; }, [](double) { return 0.75; }};
  const auto f = LinkFunction::custom({good, good}, false);
  CHECK(alpha_env(f, 3.0) == 0.5);
  CHECK(beta_env(f, 3.0) == 0.75);

  ScalarComponent lying{[](double z) { return std::tanh(z); }, [](double) { return 0.9; }, [](double) { return 1.0; }};
  CHECK_THROWS_AS(LinkFunction::custom({lying}, true), ContractError);
}

TEST_CASE("link_to_json uses tagged objects") {
  const auto j = link_to_json(LinkFunction::scaled_tanh(4, 2.0));
  CHECK(j.at("kind") == "scaled_tanh");
  CHECK(j.at("a") == 2.0);
  CHECK(link_to_json(LinkFunction::smoothed_clamp(2, 10.0, 5.0)).at("N") == 10.0);
}
