#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "upr/spline.hpp"
#include "upr/weights.hpp"

namespace upr {

// How the raw gradient turns into a step. `adam` is the default: the
// slope parameters are badly scaled across segments, and plain fixed-rate
// descent needs orders of magnitude more iterations to move the outer
// segments. `fixed` and `sqrt_decay` keep the plain rules available.
enum class StepRule { adam, fixed, sqrt_decay };

struct FitConfig {
  double eta = 1e-5;              // truncation of the risk integral
  int knots = 19;                 // M: segment count; knot grid is m/M
  std::optional<double> mu0;      // target return; default: equal-weight mean
  double learning_rate = 0.01;
  int max_iters = 10000;
  double rel_tol = 1e-8;          // stop on relative objective change
  std::uint64_t seed = 0;
  std::optional<double> gamma0;   // default: 1% quantile of the initial return
  StepRule step_rule = StepRule::adam;
  // adam only: learning rate shrinks as lr/sqrt(1 + t/lr_decay_iters);
  // 0 disables the decay.
  double lr_decay_iters = 2000.0;
  // Interpret composite-quantile weights as the mixing measure w_k (and
  // divide by the level) instead of using them as loss weights directly.
  bool cqr_weights_as_measure = false;

  void validate() const;
};

struct FitResult {
  PortfolioWeights weights;
  SplineQuantile model;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
};

// Euclidean projection onto {1'b = 1, mu_hat'b = mu0} via the two
// Lagrange multipliers. Throws when mu_hat is (numerically) proportional
// to the ones vector, in which case the target-return constraint is
// redundant and the caller may fall back to the single-constraint form.
Eigen::VectorXd project_weights(Eigen::Ref<const Eigen::VectorXd> beta_tilde,
                                Eigen::Ref<const Eigen::VectorXd> mu_hat,
                                double mu0);

// Projection onto {1'b = 1} alone.
Eigen::VectorXd project_weights(Eigen::Ref<const Eigen::VectorXd> beta_tilde);

// Elementwise max(delta, 0).
Eigen::VectorXd project_deltas(Eigen::Ref<const Eigen::VectorXd> deltas);

// Alternating projected descent on (beta, gamma, delta) minimizing the
// truncated empirical risk of the portfolio return under the two equality
// constraints. Deterministic given config.seed.
FitResult fit_upr_portfolio(const Eigen::MatrixXd& asset_returns,
                            const FitConfig& config);

// Same machinery with the weight vector frozen: fits the spline quantile
// model of a single pre-formed return series.
SplineQuantile fit_quantile_model(Eigen::Ref<const Eigen::VectorXd> samples,
                                  const FitConfig& config);

// Quantile-model fit that also exposes the trace (used by diagnostics).
FitResult fit_quantile_model_full(Eigen::Ref<const Eigen::VectorXd> samples,
                                  const FitConfig& config);

}  // namespace upr
