#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "upr/backtest.hpp"
#include "upr/optimizer.hpp"
#include "upr/panel.hpp"
#include "upr/weights.hpp"

namespace upr {

// Clayton copula pinned down by Kendall's tau: theta = 2 tau / (1 - tau),
// lower tail dependence 2^((tau-1)/(2 tau)).
struct CopulaSpec {
  double tau = 0.5;
  double theta = 2.0;
  double lambda_lower = 0.5;
  std::uint64_t seed = 0;

  static CopulaSpec from_tau(double tau, std::uint64_t seed);
  void validate() const;
};

// n pairs (u, v) in (0,1)^2 from the gamma-frailty construction:
// V ~ Gamma(1/theta), u = (1 + E1/V)^(-1/theta), v likewise. The frailty
// and the two exponentials draw from their own substreams.
Eigen::MatrixXd clayton_sample(const CopulaSpec& spec, Eigen::Index n);

// Three assets: X1, X2 standard normal coupled by the Clayton copula,
// X3 ~ N(0, 1.3^2) independent.
ReturnPanel simulate_assets(const CopulaSpec& spec, Eigen::Index n);

struct TailExperimentRow {
  std::string model;
  PortfolioWeights weights;
  double max_loss = 0.0;           // on the fresh evaluation panel
  double max_loss_insample = 0.0;  // on the panel the model was fitted to
  std::vector<double> curve_levels;  // quantile levels in (0, 0.1]
  std::vector<double> curve_values;  // empirical out-of-sample quantiles
};

struct TailExperimentResult {
  double tau_fit = 0.0;
  double tau_oos = 0.0;
  Eigen::Index n = 0;
  std::vector<TailExperimentRow> rows;
};

// Fits each model on n draws at tau_fit (target return 0), evaluates max
// loss and the low-quantile curve on n fresh draws at tau_oos. All
// randomness derives from config.seed.
TailExperimentResult tail_experiment(double tau_fit, double tau_oos,
                                     Eigen::Index n,
                                     const std::vector<ModelSpec>& models,
                                     const FitConfig& config);

}  // namespace upr
