#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "oracles.hpp"
#include "upr/errors.hpp"
#include "upr/objective.hpp"
#include "upr/optimizer.hpp"
#include "upr/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian_panel(int n, int p, std::uint64_t seed, double sd = 1.0) {
  upr::Philox rng(seed, 0);
  MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = sd * rng.normal();
  }
  return X;
}

}  // namespace

TEST_CASE("projection: worked two-asset case is exact") {
  VectorXd mu(2), bt(2);
  mu << 1.0, 2.0;
  bt << 1.0, 1.0;
  VectorXd b = upr::project_weights(bt, mu, 1.5);
  CHECK(b[0] == 0.5);  // bitwise: the arithmetic is exact here
  CHECK(b[1] == 0.5);
  CHECK(b.sum() == 1.0);
  CHECK(mu.dot(b) == 1.5);
}

TEST_CASE("projection: feasible input returned unchanged") {
  upr::Philox rng(3, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const int p = 6;
    VectorXd mu(p), b0(p);
    for (int j = 0; j < p; ++j) mu[j] = rng.normal();
    for (int j = 0; j < p; ++j) b0[j] = rng.normal();
    VectorXd feasible = upr::project_weights(b0, mu, 0.02);
    VectorXd again = upr::project_weights(feasible, mu, 0.02);
    CHECK((again - feasible).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("projection matches the generic KKT oracle") {
  upr::Philox rng(5, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const int p = 2 + static_cast<int>(rng() % 49);
    VectorXd mu(p), bt(p);
    for (int j = 0; j < p; ++j) mu[j] = 0.001 * rng.normal();
    for (int j = 0; j < p; ++j) bt[j] = rng.normal();
    const double mu0 = 0.001 * rng.normal();
    VectorXd got = upr::project_weights(bt, mu, mu0);
    CHECK(std::abs(got.sum() - 1.0) < 1e-12);
    CHECK(std::abs(mu.dot(got) - mu0) < 1e-12);
    VectorXd want = oracle::kkt_projection(bt, mu, mu0);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("projection optimality among random feasible points") {
  upr::Philox rng(7, 0);
  const int p = 8;
  VectorXd mu(p), bt(p);
  for (int j = 0; j < p; ++j) mu[j] = rng.normal();
  for (int j = 0; j < p; ++j) bt[j] = 2.0 * rng.normal();
  const double mu0 = 0.5;
  VectorXd proj = upr::project_weights(bt, mu, mu0);
  const double dist = (proj - bt).norm();
  for (int rep = 0; rep < 1000; ++rep) {
    VectorXd r(p);
    for (int j = 0; j < p; ++j) r[j] = 3.0 * rng.normal();
    VectorXd feasible = upr::project_weights(r, mu, mu0);
    CHECK(dist <= (feasible - bt).norm() + 1e-10);
  }
}

TEST_CASE("projection rejects a mean vector proportional to ones") {
  VectorXd mu = VectorXd::Constant(4, 0.3);
  VectorXd bt = VectorXd::Ones(4);
  CHECK_THROWS_WITH_AS(upr::project_weights(bt, mu, 0.1),
                       doctest::Contains("redundant"), upr::validation_error);
  // single-constraint fallback
  VectorXd b = upr::project_weights(bt);
  CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("delta projection") {
  VectorXd d(2);
  d << -1.0, 0.5;
  VectorXd got = upr::project_deltas(d);
  CHECK(got[0] == 0.0);
  CHECK(got[1] == 0.5);
  VectorXd nonneg(3);
  nonneg << 0.0, 0.2, 5.0;
  CHECK((upr::project_deltas(nonneg).array() == nonneg.array()).all());
  VectorXd all_neg = VectorXd::Constant(3, -2.0);
  CHECK((upr::project_deltas(all_neg).array() == 0.0).all());
}

TEST_CASE("identical seeds give bitwise-identical fits") {
  MatrixXd X = gaussian_panel(400, 3, 11);
  upr::FitConfig cfg;
  cfg.max_iters = 300;
  cfg.seed = 42;
  upr::FitResult a = upr::fit_upr_portfolio(X, cfg);
  upr::FitResult b = upr::fit_upr_portfolio(X, cfg);
  CHECK((a.weights.beta.array() == b.weights.beta.array()).all());
  CHECK(a.model.gamma == b.model.gamma);
  CHECK((a.model.slopes.array() == b.model.slopes.array()).all());
  REQUIRE(a.objective_trace.size() == b.objective_trace.size());
  for (size_t i = 0; i < a.objective_trace.size(); ++i) {
    CHECK(a.objective_trace[i] == b.objective_trace[i]);
  }
  upr::FitConfig other = cfg;
  other.seed = 43;
  upr::FitResult c = upr::fit_upr_portfolio(X, other);
  CHECK((a.model.slopes.array() != c.model.slopes.array()).any());
}

TEST_CASE("fit returns feasible weights and nonnegative deltas") {
  MatrixXd X = gaussian_panel(500, 4, 13, 0.7);
  upr::FitConfig cfg;
  cfg.max_iters = 500;
  cfg.mu0 = 0.01;
  upr::FitResult fit = upr::fit_upr_portfolio(X, cfg);
  CHECK(std::abs(fit.weights.beta.sum() - 1.0) <= 1e-10);
  CHECK(std::abs(fit.weights.mu_hat.dot(fit.weights.beta) - 0.01) <= 1e-10);
  CHECK((fit.model.deltas().array() >= 0.0).all());
  for (double v : fit.objective_trace) CHECK(std::isfinite(v));
}

TEST_CASE("plain fixed-rate descent has a non-increasing trace") {
  MatrixXd X = gaussian_panel(2000, 3, 17);
  upr::FitConfig cfg;
  cfg.step_rule = upr::StepRule::fixed;
  cfg.learning_rate = 0.01;
  cfg.max_iters = 800;
  cfg.rel_tol = 1e-14;
  upr::FitResult fit = upr::fit_upr_portfolio(X, cfg);
  const auto& tr = fit.objective_trace;
  for (size_t t = 10; t + 1 < tr.size(); ++t) {
    CHECK(tr[t + 1] <= tr[t] + 1e-8);
  }
}

TEST_CASE("gradient norm is small at the returned optimum") {
  MatrixXd X = gaussian_panel(2000, 3, 19);
  upr::FitConfig cfg;
  cfg.max_iters = 6000;
  cfg.learning_rate = 0.02;
  cfg.lr_decay_iters = 1000.0;
  upr::FitResult fit = upr::fit_upr_portfolio(X, cfg);
  upr::UprGradients g =
      upr::upr_gradients(X, fit.weights.beta, fit.model, cfg.eta);
  CHECK(std::abs(g.gamma) < 0.02);
  // stationarity in the delta parameterization where the nonnegativity
  // constraint is inactive
  VectorXd deltas = fit.model.deltas();
  for (int m = 0; m < g.slopes.size(); ++m) {
    const double gd = m + 1 < g.slopes.size()
                          ? g.slopes[m] - g.slopes[m + 1]
                          : g.slopes[m];
    if (deltas[m] > 1e-3) CHECK(std::abs(gd) < 0.02);
  }
  // the projected beta direction is near zero at the constrained optimum
  VectorXd stepped = upr::project_weights(
      fit.weights.beta - g.beta, fit.weights.mu_hat, fit.weights.mu0);
  CHECK((stepped - fit.weights.beta).norm() < 0.05);
}

TEST_CASE("degenerate mean vector: consistent target falls back, else throws") {
  // identical columns make the sample means exactly equal
  MatrixXd X = gaussian_panel(300, 1, 23).replicate(1, 3);
  const double common = X.col(0).mean();
  upr::FitConfig cfg;
  cfg.max_iters = 50;
  cfg.mu0 = common;
  upr::FitResult fit = upr::fit_upr_portfolio(X, cfg);
  CHECK(std::abs(fit.weights.beta.sum() - 1.0) <= 1e-10);
  cfg.mu0 = common + 0.5;  // unattainable
  CHECK_THROWS_AS(upr::fit_upr_portfolio(X, cfg), upr::validation_error);
}

TEST_CASE("quantile model: uniform draws recover the identity") {
  upr::Philox rng(29, 0);
  VectorXd y(20000);
  for (int i = 0; i < y.size(); ++i) y[i] = rng.uniform();
  upr::FitConfig cfg;
  cfg.knots = 19;
  cfg.learning_rate = 0.02;
  cfg.max_iters = 6000;
  cfg.lr_decay_iters = 1500.0;
  cfg.rel_tol = 1e-12;
  upr::SplineQuantile g = upr::fit_quantile_model(y, cfg);
  for (int k = 1; k <= 9; ++k) {
    const double a = k / 10.0;
    CHECK(std::abs(upr::spline_eval(g, a) - a) < 0.02);
  }
}

TEST_CASE("quantile model: constant samples give a flat curve") {
  VectorXd y = VectorXd::Constant(500, 0.37);
  upr::FitConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.lr_decay_iters = 10.0;  // aggressive decay: the target is degenerate
  cfg.max_iters = 40000;
  cfg.rel_tol = 1e-16;
  upr::SplineQuantile g = upr::fit_quantile_model(y, cfg);
  for (int i = 0; i <= 20; ++i) {
    const double a = cfg.eta + (1.0 - cfg.eta) * i / 20.0;
    CHECK(std::abs(upr::spline_eval(g, a) - 0.37) < 1e-3);
  }
}

TEST_CASE("estimator stability across seeds (symmetric Gaussian assets)") {
  Eigen::MatrixXd betas(10, 3);
  for (int s = 0; s < 10; ++s) {
    MatrixXd X = gaussian_panel(5000, 3, 100 + static_cast<std::uint64_t>(s));
    upr::FitConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.max_iters = 8000;
    cfg.learning_rate = 0.02;
    cfg.lr_decay_iters = 1500.0;
    betas.row(s) = upr::fit_upr_portfolio(X, cfg).weights.beta.transpose();
  }
  for (int j = 0; j < 3; ++j) {
    const double spread = betas.col(j).maxCoeff() - betas.col(j).minCoeff();
    CHECK(spread < 0.02);
    CHECK(std::abs(betas.col(j).mean() - 1.0 / 3.0) < 0.02);
  }
}

TEST_CASE("scale behavior: fitted curve scales with the data") {
  // positive homogeneity of the objective carries to the fit: doubling
  // the returns (and mu0) doubles the fitted quantile curve, up to
  // optimizer tolerance on the interior of the level range
  MatrixXd X = gaussian_panel(2000, 3, 31);
  upr::FitConfig cfg;
  cfg.seed = 5;
  cfg.max_iters = 30000;
  cfg.learning_rate = 0.02;
  cfg.lr_decay_iters = 1000.0;
  cfg.rel_tol = 1e-16;
  cfg.mu0 = 0.0;
  upr::FitResult base = upr::fit_upr_portfolio(X, cfg);
  const double lambda = 2.0;
  upr::FitConfig scaled_cfg = cfg;
  scaled_cfg.mu0 = lambda * *cfg.mu0;
  upr::FitResult scaled = upr::fit_upr_portfolio(lambda * X, scaled_cfg);
  double worst = 0.0;
  for (int k = 5; k <= 95; ++k) {
    const double a = k / 100.0;
    worst = std::max(worst,
                     std::abs(upr::spline_eval(scaled.model, a) -
                              lambda * upr::spline_eval(base.model, a)));
  }
  CHECK(worst < 1e-3 * lambda);
}

TEST_CASE("bad learning rate raises a numeric error") {
  MatrixXd X = gaussian_panel(200, 3, 37);
  upr::FitConfig cfg;
  cfg.step_rule = upr::StepRule::fixed;
  cfg.learning_rate = 1e307;  // drives the objective to overflow
  cfg.max_iters = 2000;
  CHECK_THROWS_AS(upr::fit_upr_portfolio(X, cfg), upr::numeric_error);
}
