#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "oracles.hpp"
#include "upr/errors.hpp"
#include "upr/risk.hpp"
#include "upr/rng.hpp"

using Eigen::VectorXd;

namespace {

VectorXd draws_uniform(int n, std::uint64_t seed) {
  upr::Philox rng(seed, 0);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform();
  return v;
}

// dyadic-rational samples so sums are exact in double arithmetic
VectorXd draws_dyadic(int n, std::uint64_t seed) {
  upr::Philox rng(seed, 1);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = static_cast<double>(static_cast<long>(rng() % 2097152) - 1048576) /
           1024.0;
  }
  return v;
}

}  // namespace

TEST_CASE("quantile loss") {
  CHECK(upr::quantile_loss(0.5, 1.0) == 0.5);
  CHECK(upr::quantile_loss(0.1, -1.0) == doctest::Approx(0.9));
  CHECK(upr::quantile_loss(0.3, 0.0) == 0.0);
  CHECK_THROWS_AS(upr::quantile_loss(0.0, 1.0), upr::validation_error);
  CHECK_THROWS_AS(upr::quantile_loss(1.0, 1.0), upr::validation_error);
  upr::Philox rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    CHECK(upr::quantile_loss(rng.uniform(), 4.0 * rng.normal()) >= 0.0);
  }
}

TEST_CASE("empirical alpha risk: examples") {
  VectorXd s(4);
  s << -1.0, 0.0, 1.0, 2.0;
  CHECK(upr::empirical_alpha_risk(s, 0.25) == doctest::Approx(1.0));
  CHECK(upr::empirical_alpha_risk(s, 1.0) == doctest::Approx(-0.5));

  VectorXd c = VectorXd::Constant(3, 2.5);
  for (double a : {0.1, 0.5, 1.0}) {
    CHECK(upr::empirical_alpha_risk(c, a) == doctest::Approx(-2.5));
  }

  // analytic: alpha-risk of U(0,1) is -alpha/2
  VectorXd u = draws_uniform(100000, 17);
  CHECK(std::abs(upr::empirical_alpha_risk(u, 0.5) - (-0.25)) < 0.01);

  CHECK_THROWS_AS(upr::empirical_alpha_risk(VectorXd(), 0.5),
                  upr::validation_error);
  CHECK_THROWS_AS(upr::empirical_alpha_risk(s, 1.5), upr::validation_error);
}

TEST_CASE("empirical quantile: order-statistic convention") {
  VectorXd s(5);
  s << 3.0, 1.0, 2.0, 5.0, 4.0;
  CHECK(upr::empirical_quantile(s, 0.2) == 1.0);   // ceil(1) = 1st
  CHECK(upr::empirical_quantile(s, 0.21) == 2.0);  // ceil(1.05) = 2nd
  CHECK(upr::empirical_quantile(s, 1.0) == 5.0);
  // ceil guard: 20 * 0.1 must give the 2nd order statistic
  VectorXd t = VectorXd::LinSpaced(20, 1.0, 20.0);
  CHECK(upr::empirical_quantile(t, 0.1) == 2.0);
}

TEST_CASE("discrete pessimistic risk") {
  VectorXd s(4);
  s << -1.0, 0.0, 1.0, 2.0;
  upr::RiskLevelGrid g;
  g.levels = Eigen::Vector2d(0.25, 1.0);
  g.weights = Eigen::Vector2d(0.5, 0.5);
  CHECK(upr::discrete_pessimistic_risk(s, g) == doctest::Approx(0.25));

  upr::RiskLevelGrid one = upr::RiskLevelGrid::single(0.25);
  CHECK(upr::discrete_pessimistic_risk(s, one) ==
        doctest::Approx(upr::empirical_alpha_risk(s, 0.25)));

  VectorXd c = VectorXd::Constant(7, -0.75);
  CHECK(upr::discrete_pessimistic_risk(c, g) == doctest::Approx(0.75));

  upr::RiskLevelGrid bad;
  bad.levels = Eigen::Vector2d(0.5, 0.25);
  bad.weights = Eigen::Vector2d(0.5, 0.5);
  CHECK_THROWS_AS(upr::discrete_pessimistic_risk(s, bad),
                  upr::validation_error);
}

TEST_CASE("grid UPR: constants and the U(0,1) analytic value") {
  VectorXd c = VectorXd::Constant(11, 3.25);
  for (int K : {1, 7, 100}) {
    CHECK(upr::upr_via_grid(c, K) == doctest::Approx(-3.25));
  }
  VectorXd u = draws_uniform(1000000, 23);
  CHECK(std::abs(upr::upr_via_grid(u, 10000) - (-0.25)) < 0.005);
}

TEST_CASE("grid UPR matches quadrature for the Gumbel") {
  // quantile of the standard Gumbel: -log(-log(t))
  const int n = 1000000;
  upr::Philox rng(31, 0);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = -std::log(-std::log(rng.uniform()));
  const double est = upr::upr_via_grid(y, 10000);
  const double quad = oracle::integrate(
      [](double t) { return -(-std::log(-std::log(t))) * (-std::log(t)); },
      1e-12, 1.0 - 1e-12, 1e-9);
  CHECK(std::abs(est - quad) < 0.01);
  // the quadrature itself agrees with the closed form 1 - EulerGamma
  CHECK(quad == doctest::Approx(0.4227843350984671).epsilon(1e-6));
}

TEST_CASE("distortion phi") {
  CHECK(upr::distortion_phi(1.0) == doctest::Approx(1.0));
  CHECK(upr::distortion_phi(std::exp(-1.0)) ==
        doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-14));
  CHECK(upr::distortion_phi(1e-300) < 1e-290);  // limit convention at 0+
  CHECK_THROWS_AS(upr::distortion_phi(0.0), upr::validation_error);
  CHECK_THROWS_AS(upr::distortion_phi(1.5), upr::validation_error);
}

TEST_CASE("beta distortion risk") {
  VectorXd c = VectorXd::Constant(9, 1.5);
  for (auto [s, h] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {3.0, 2.0}}) {
    upr::BetaDistortion b{s, h};
    CHECK(upr::beta_distortion_risk(c, b, 500) == doctest::Approx(-1.5));
  }

  // Beta(1,1) is the uniform measure: agrees with the uniform grid up to
  // midpoint-vs-right-endpoint discretization
  VectorXd u = draws_uniform(100000, 37);
  upr::BetaDistortion flat{1.0, 1.0};
  CHECK(std::abs(upr::beta_distortion_risk(u, flat, 2000) -
                 upr::upr_via_grid(u, 2000)) < 0.01);

  upr::BetaDistortion bad{0.5, 1.0};
  CHECK_THROWS_AS(upr::beta_distortion_risk(u, bad, 100),
                  upr::validation_error);
}

TEST_CASE("GEV closed form: worked values") {
  // Gamma(1.5)/0.5 * (2 - 2^-0.5) - 2
  const double v = upr::gev_beta_risk_analytic(0.0, 1.0, 0.5, 2.0);
  CHECK(v == doctest::Approx(2.0 * std::tgamma(1.5) * (2.0 - std::pow(2.0, -0.5)) - 2.0)
                 .epsilon(1e-14));
  CHECK(v == doctest::Approx(0.29158).epsilon(1e-4));
  // right limit at s = 1: Gamma(2.5)/0.5 - 2
  const double lim = upr::gev_beta_risk_analytic(0.0, 1.0, 0.5, 1.0);
  CHECK(lim == doctest::Approx(2.0 * std::tgamma(2.5) - 2.0).epsilon(1e-14));
  CHECK(lim == doctest::Approx(0.65868).epsilon(1e-4));

  // cross-check against quadrature of the quantile-function integral:
  // risk = -s/(s-1) * int G(t)(1 - t^{s-1}) dt
  for (double kappa : {-0.3, 0.2, 0.5}) {
    for (double s : {1.5, 2.0, 4.0}) {
      const double quad =
          -s / (s - 1.0) *
          oracle::integrate(
              [&](double t) {
                return upr::gev_quantile(0.3, 1.2, kappa, t) *
                       (1.0 - std::pow(t, s - 1.0));
              },
              1e-13, 1.0 - 1e-13, 1e-10);
      CHECK(upr::gev_beta_risk_analytic(0.3, 1.2, kappa, s) ==
            doctest::Approx(quad).epsilon(1e-5));
    }
  }

  CHECK_THROWS_AS(upr::gev_beta_risk_analytic(0, 1, -1.2, 2),
                  upr::validation_error);
  CHECK_THROWS_AS(upr::gev_beta_risk_analytic(0, -1, 0.5, 2),
                  upr::validation_error);
  CHECK_THROWS_AS(upr::gev_beta_risk_analytic(0, 1, 0.0, 2),
                  upr::validation_error);
}

TEST_CASE("GEV closed form is non-increasing in s") {
  for (double kappa : {-0.3, 0.2, 0.5}) {
    double prev = upr::gev_beta_risk_analytic(0.0, 1.0, kappa, 1.0);
    for (double s : {1.5, 2.0, 4.0, 8.0}) {
      double cur = upr::gev_beta_risk_analytic(0.0, 1.0, kappa, s);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("coherence of grid UPR on samples") {
  const int K = 50;
  upr::Philox rng(41, 0);
  for (int rep = 0; rep < 200; ++rep) {
    VectorXd y = draws_dyadic(64, 100 + rep);
    const double base = upr::upr_via_grid(y, K);

    // translation by a dyadic constant: exact up to one rounding per level
    const double c = 2.75;
    VectorXd shifted = y.array() + c;
    CHECK(std::abs(upr::upr_via_grid(shifted, K) - (base - c)) < 1e-12);

    // positive homogeneity with a power-of-two factor: bitwise
    VectorXd doubled = 2.0 * y;
    CHECK(upr::upr_via_grid(doubled, K) == 2.0 * base);
    VectorXd halved = 0.5 * y;
    CHECK(upr::upr_via_grid(halved, K) == 0.5 * base);

    // monotonicity: Y1 <= Y2 elementwise => risk(Y1) >= risk(Y2)
    VectorXd bigger = y;
    for (int i = 0; i < y.size(); ++i) bigger[i] += rng.uniform();
    CHECK(upr::upr_via_grid(bigger, K) <= base + 1e-12);

    // subadditivity
    VectorXd y2 = draws_dyadic(64, 10000 + rep);
    VectorXd sum = y + y2;
    CHECK(upr::upr_via_grid(sum, K) <=
          base + upr::upr_via_grid(y2, K) + 1e-9);
  }
}

TEST_CASE("first proposition identity on samples with integer n*alpha") {
  upr::Philox rng(43, 0);
  const int n = 40;
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.normal();
    for (double alpha : {0.1, 0.25, 0.5, 0.75}) {
      const double q = upr::empirical_quantile(y, alpha);
      double loss = 0.0;
      for (int i = 0; i < n; ++i) loss += upr::quantile_loss(alpha, y[i] - q);
      loss /= n;
      // scan all sample points: q must minimize the mean loss
      for (int j = 0; j < n; ++j) {
        double other = 0.0;
        for (int i = 0; i < n; ++i) {
          other += upr::quantile_loss(alpha, y[i] - y[j]);
        }
        CHECK(loss <= other / n + 1e-12);
      }
      const double rhs =
          alpha * (y.mean() + upr::empirical_alpha_risk(y, alpha));
      CHECK(loss == doctest::Approx(rhs).epsilon(1e-9));
    }
  }
}

TEST_CASE("second proposition identity for a discrete grid") {
  upr::Philox rng(47, 0);
  const int n = 40;
  upr::RiskLevelGrid g;
  g.levels = Eigen::Vector4d(0.1, 0.25, 0.5, 0.75);
  g.weights = Eigen::Vector4d(0.4, 0.3, 0.2, 0.1);
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = 0.3 * rng.normal() + 0.01;
    double composite = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double a = g.levels[k];
      const double q = upr::empirical_quantile(y, a);
      double loss = 0.0;
      for (int i = 0; i < n; ++i) loss += upr::quantile_loss(a, y[i] - q);
      composite += g.weights[k] / a * loss / n;
    }
    const double lhs = upr::discrete_pessimistic_risk(y, g) + y.mean();
    CHECK(lhs == doctest::Approx(composite).epsilon(1e-9));
  }
}
