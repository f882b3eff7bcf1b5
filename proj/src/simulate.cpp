#include "upr/simulate.hpp"

#include <cmath>

#include "upr/errors.hpp"
#include "upr/portfolios.hpp"
#include "upr/risk.hpp"
#include "upr/rng.hpp"

namespace upr {

namespace {

// substream layout per copula seed
enum Stream : std::uint64_t {
  kFrailty = 0,
  kExpU = 1,
  kExpV = 2,
  kIndependent = 3,
};

}  // namespace

CopulaSpec CopulaSpec::from_tau(double tau, std::uint64_t seed) {
  CopulaSpec s;
  s.tau = tau;
  s.theta = 2.0 * tau / (1.0 - tau);
  s.lambda_lower = std::exp2((tau - 1.0) / (2.0 * tau));
  s.seed = seed;
  s.validate();
  return s;
}

void CopulaSpec::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw validation_error("tau must lie in (0,1)");
  if (!(theta > 0.0)) throw validation_error("copula parameter must be positive");
  if (!(lambda_lower > 0.0 && lambda_lower < 1.0)) {
    throw validation_error("tail-dependence coefficient must lie in (0,1)");
  }
  if (std::abs(lambda_lower - std::exp2((tau - 1.0) / (2.0 * tau))) > 1e-12) {
    throw validation_error("tail-dependence coefficient inconsistent with tau");
  }
}

Eigen::MatrixXd clayton_sample(const CopulaSpec& spec, Eigen::Index n) {
  spec.validate();
  if (n < 1) throw validation_error("need at least one draw");
  Philox frailty(spec.seed, kFrailty);
  Philox e1(spec.seed, kExpU);
  Philox e2(spec.seed, kExpV);
  const double inv_theta = 1.0 / spec.theta;
  Eigen::MatrixXd uv(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = frailty.gamma(inv_theta);
    uv(i, 0) = std::pow(1.0 + e1.exponential() / v, -inv_theta);
    uv(i, 1) = std::pow(1.0 + e2.exponential() / v, -inv_theta);
  }
  return uv;
}

ReturnPanel simulate_assets(const CopulaSpec& spec, Eigen::Index n) {
  Eigen::MatrixXd uv = clayton_sample(spec, n);
  Philox indep(spec.seed, kIndependent);
  ReturnPanel panel;
  panel.tickers = {"A1", "A2", "A3"};
  panel.dates.reserve(static_cast<size_t>(n));
  panel.returns.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    panel.dates.push_back(synthetic_date(static_cast<long>(i)));
    panel.returns(i, 0) = normal_quantile(uv(i, 0));
    panel.returns(i, 1) = normal_quantile(uv(i, 1));
    panel.returns(i, 2) = 1.3 * indep.normal();
  }
  panel.validate();
  return panel;
}

TailExperimentResult tail_experiment(double tau_fit, double tau_oos,
                                     Eigen::Index n,
                                     const std::vector<ModelSpec>& models,
                                     const FitConfig& config) {
  if (models.empty()) throw validation_error("no models requested");
  const CopulaSpec fit_spec =
      CopulaSpec::from_tau(tau_fit, mix_seed(config.seed, 11));
  const CopulaSpec oos_spec =
      CopulaSpec::from_tau(tau_oos, mix_seed(config.seed, 12));

  const Eigen::MatrixXd fitX = simulate_assets(fit_spec, n).returns;
  const Eigen::MatrixXd oosX = simulate_assets(oos_spec, n).returns;

  FitConfig fit = config;
  fit.seed = mix_seed(config.seed, 13);
  fit.mu0 = fit.mu0.value_or(0.0);  // every asset has zero mean by design

  TailExperimentResult out;
  out.tau_fit = tau_fit;
  out.tau_oos = tau_oos;
  out.n = n;

  std::vector<double> levels;
  for (int k = 1; k <= 20; ++k) levels.push_back(0.005 * k);

  for (const ModelSpec& spec : models) {
    TailExperimentRow row;
    row.model = spec.name();
    switch (spec.kind) {
      case ModelKind::ew:
        row.weights = equal_weight(fitX);
        break;
      case ModelKind::mv:
        row.weights = mean_variance(fitX, *fit.mu0);
        break;
      case ModelKind::qr:
        row.weights = qr_portfolio(fitX, spec.qr_alpha, *fit.mu0, fit);
        break;
      case ModelKind::cqr1:
        row.weights = cqr_portfolio(fitX, cqr1_grid(), *fit.mu0, fit);
        break;
      case ModelKind::cqr2:
        row.weights = cqr_portfolio(fitX, cqr2_grid(), *fit.mu0, fit);
        break;
      case ModelKind::upr:
        row.weights = fit_upr_portfolio(fitX, fit).weights;
        break;
    }
    const Eigen::VectorXd oos = oosX * row.weights.beta;
    row.max_loss = -oos.minCoeff();
    row.max_loss_insample = -(fitX * row.weights.beta).minCoeff();
    for (double a : levels) {
      row.curve_levels.push_back(a);
      row.curve_values.push_back(empirical_quantile(oos, a));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace upr
