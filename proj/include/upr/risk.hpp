#pragma once

#include <Eigen/Core>

namespace upr {

// Pinball loss (alpha - [z<0]) * z; nonnegative for every z.
double quantile_loss(double alpha, double z);

// k-th order statistic with k = ceil(n*alpha) (lower-interpolation
// convention used throughout the project).
double empirical_quantile(Eigen::Ref<const Eigen::VectorXd> samples,
                          double alpha);

// Negative mean of the ceil(n*alpha) smallest samples; the expected
// shortfall of the sample at level alpha. alpha = 1 gives -(mean).
double empirical_alpha_risk(Eigen::Ref<const Eigen::VectorXd> samples,
                            double alpha);

// Discrete mixing measure over risk levels.
struct RiskLevelGrid {
  Eigen::VectorXd levels;   // strictly increasing, in (0, 1]
  Eigen::VectorXd weights;  // nonnegative, sum to 1

  static RiskLevelGrid single(double level);
  // {1/K, ..., K/K} with equal weights 1/K.
  static RiskLevelGrid uniform(int K);
  void validate() const;
};

double discrete_pessimistic_risk(Eigen::Ref<const Eigen::VectorXd> samples,
                                 const RiskLevelGrid& grid);

// Uniform pessimistic risk via the K-level uniform grid.
double upr_via_grid(Eigen::Ref<const Eigen::VectorXd> samples, int K);

// Distortion of the uniform pessimistic risk: -t*log(t) + t on (0, 1].
double distortion_phi(double t);

// Beta(s, h) mixing density over risk levels; s, h >= 1 keeps the measure
// pessimistic (decaying weight of the better outcomes).
struct BetaDistortion {
  double s = 1.0;
  double h = 1.0;

  void validate() const;
  double density(double alpha) const;
};

// Midpoint-rule approximation of the beta-mixed risk on K levels
// alpha_k = (k - 1/2) / K.
double beta_distortion_risk(Eigen::Ref<const Eigen::VectorXd> samples,
                            const BetaDistortion& beta, int K);

// Closed form of the Beta(s,1)-mixed risk for a GEV(xi, zeta, kappa)
// variable:  zeta*Gamma(1+kappa)/kappa * (s - s^-kappa)/(s - 1) - xi -
// zeta/kappa, with the right limit zeta*Gamma(2+kappa)/kappa - xi -
// zeta/kappa at s = 1. Requires kappa in (-1, 0) or (0, inf) and zeta > 0.
double gev_beta_risk_analytic(double xi, double zeta, double kappa, double s);

// Quantile function of GEV(xi, zeta, kappa): xi + zeta*(1 - (-log p)^kappa)/kappa.
double gev_quantile(double xi, double zeta, double kappa, double p);

}  // namespace upr
