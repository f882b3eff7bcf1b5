#pragma once

#include <Eigen/Core>

#include "upr/optimizer.hpp"
#include "upr/risk.hpp"
#include "upr/weights.hpp"

namespace upr {

PortfolioWeights equal_weight(Eigen::Index p);

// Equal weights with the realized expected return recorded as mu0.
PortfolioWeights equal_weight(const Eigen::MatrixXd& asset_returns);

// Minimum-variance weights under the two equality constraints, solved by
// the closed-form two-multiplier system. A small ridge is added when the
// covariance solve fails; an exactly redundant target-return constraint
// falls back to the plain minimum-variance solution when consistent.
PortfolioWeights mean_variance(const Eigen::MatrixXd& asset_returns,
                               double mu0);

// Projected-subgradient solution of the constrained composite quantile
// problem  min sum_k w*_k mean(loss_{a_k}(x'beta - b_k0)). The intercepts
// are re-solved exactly (empirical quantiles) every iteration.
struct CompositeQrFit {
  PortfolioWeights weights;
  Eigen::VectorXd intercepts;  // per level, at the returned weights
  double objective = 0.0;
  int iterations = 0;
};

CompositeQrFit fit_composite_qr(const Eigen::MatrixXd& asset_returns,
                                const RiskLevelGrid& grid,
                                Eigen::Ref<const Eigen::VectorXd> loss_weights,
                                double mu0, const FitConfig& config);

// Single-level quantile portfolio (the mean-CVaR portfolio at `alpha`).
PortfolioWeights qr_portfolio(const Eigen::MatrixXd& asset_returns,
                              double alpha, double mu0,
                              const FitConfig& config);

// Composite quantile portfolio. Grid weights are used as the loss weights
// w*_k directly unless config.cqr_weights_as_measure divides them by the
// levels first.
PortfolioWeights cqr_portfolio(const Eigen::MatrixXd& asset_returns,
                               const RiskLevelGrid& grid, double mu0,
                               const FitConfig& config);

// Published presets: levels {0.1, 0.5, 0.9} with equal weights, and
// levels {0.01, 0.1, 0.5, 0.9} with weights (0.4, 0.3, 0.2, 0.1).
RiskLevelGrid cqr1_grid();
RiskLevelGrid cqr2_grid();

}  // namespace upr
