#pragma once

#include <Eigen/Core>

namespace upr {

// Wealth is additive in returns here (CW = 1 + sum r_t, initial wealth 1);
// the compounding variant exists for cross-checks only.
double cumulative_wealth(Eigen::Ref<const Eigen::VectorXd> r);
double cumulative_wealth_compound(Eigen::Ref<const Eigen::VectorXd> r);

// Most negative peak-to-trough ratio of the additive wealth path, 0 for
// monotone growth.
double max_drawdown(Eigen::Ref<const Eigen::VectorXd> r);

// -min(r_t).
double max_loss(Eigen::Ref<const Eigen::VectorXd> r);

// Expected shortfall of the return series at level 0.1.
double cvar_01(Eigen::Ref<const Eigen::VectorXd> r);

// mean / sd, sample standard deviation (n-1).
double sharpe(Eigen::Ref<const Eigen::VectorXd> r);

struct MetricTable {
  double cw = 0.0;
  double max_loss = 0.0;
  double mdd = 0.0;
  double cvar01 = 0.0;
  double sr = 0.0;
};

MetricTable compute_metrics(Eigen::Ref<const Eigen::VectorXd> r);

// Z statistic for equality of two Sharpe ratios (asymptotically standard
// normal under the null). Sample moments and covariance use the n-1
// denominator. Identical series give 0 by convention.
double sr_test(Eigen::Ref<const Eigen::VectorXd> r_i,
               Eigen::Ref<const Eigen::VectorXd> r_j);

}  // namespace upr
