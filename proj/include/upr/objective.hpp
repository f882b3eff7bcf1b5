#pragma once

#include <Eigen/Core>

#include "upr/spline.hpp"

namespace upr {

// One pass over a portfolio-return series: the truncated risk functional
// R_eta^n in closed form plus everything its gradients need.
//
// Per sample, with a = clamp(g^-1(y), [eta,1]) and L = log a:
//   S(y) = (1 - eta + L)(y - gamma)
//        + sum_m b_m (1 - (1-d_m)^2/2 - max(a, d_m) + max(L, log d_m) d_m),
// where the d_m = 0 log term is taken as 0. The clamp is held constant when
// differentiating; dS/d b_m is then exactly the bracket above and
// dS/d gamma = -(1 - eta + L), both of which finite differences of this
// closed form reproduce.
struct UprObjectiveTerms {
  double value = 0.0;
  double grad_gamma = 0.0;
  Eigen::VectorXd grad_slopes;    // d/d b_m, averaged over samples
  Eigen::VectorXd sample_weight;  // w_i = 1 - eta + log a_i = dS_i/dy_i
};

UprObjectiveTerms upr_objective_terms(Eigen::Ref<const Eigen::VectorXd> y,
                                      const SplineQuantile& model, double eta);

double upr_objective(Eigen::Ref<const Eigen::VectorXd> y,
                     const SplineQuantile& model, double eta);

double upr_objective(const Eigen::MatrixXd& asset_returns,
                     Eigen::Ref<const Eigen::VectorXd> beta,
                     const SplineQuantile& model, double eta);

struct UprGradients {
  Eigen::VectorXd beta;
  double gamma = 0.0;
  Eigen::VectorXd slopes;
};

UprGradients upr_gradients(const Eigen::MatrixXd& asset_returns,
                           Eigen::Ref<const Eigen::VectorXd> beta,
                           const SplineQuantile& model, double eta);

}  // namespace upr
