#include "upr/optimizer.hpp"

#include <cassert>
#include <cmath>

#include "upr/errors.hpp"
#include "upr/objective.hpp"
#include "upr/risk.hpp"
#include "upr/rng.hpp"

namespace upr {

namespace {

constexpr double kDegenerateTol = 1e-12;

bool mu_degenerate(Eigen::Ref<const Eigen::VectorXd> mu_hat) {
  const double p = static_cast<double>(mu_hat.size());
  const double mumu = mu_hat.squaredNorm();
  const double s = mu_hat.sum();
  return p * mumu - s * s <= kDegenerateTol * p * mumu;
}

struct Adam {
  Eigen::VectorXd m, v;
  int t = 0;

  explicit Adam(Eigen::Index n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

  Eigen::VectorXd step(const Eigen::VectorXd& g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g.cwiseProduct(g);
    const double mc = 1.0 - std::pow(0.9, t);
    const double vc = 1.0 - std::pow(0.999, t);
    return lr * (m / mc).array() /
           ((v / vc).array().sqrt() + 1e-8).matrix().array();
  }
};

// Momentum with a scalar second-moment normalizer. The weight vector is
// updated through an exact projection, and per-coordinate rescaling would
// bend the step off the gradient direction and can stall against the
// constraint plane; a scalar normalizer keeps the direction while staying
// scale-free.
struct ScalarAdam {
  Eigen::VectorXd m;
  double v = 0.0;
  int t = 0;

  explicit ScalarAdam(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)) {}

  Eigen::VectorXd step(const Eigen::VectorXd& g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g.squaredNorm() / static_cast<double>(g.size());
    const double mc = 1.0 - std::pow(0.9, t);
    const double vc = 1.0 - std::pow(0.999, t);
    return (lr / (std::sqrt(v / vc) + 1e-12)) * (m / mc);
  }
};

FitResult fit_impl(const Eigen::MatrixXd& X, const FitConfig& cfg,
                   bool fit_beta) {
  cfg.validate();
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n < 2) throw validation_error("need at least 2 return rows");
  if (fit_beta && p < 2) throw validation_error("need at least 2 assets");

  const Eigen::VectorXd mu_hat = X.colwise().mean();
  const double mu0 = cfg.mu0.value_or(mu_hat.mean());

  bool two_constraints = fit_beta;
  if (fit_beta && mu_degenerate(mu_hat)) {
    if (std::abs(mu0 - mu_hat.mean()) <=
        1e-10 * std::max(1.0, std::abs(mu0))) {
      two_constraints = false;  // redundant but consistent constraint
    } else {
      throw validation_error(
          "target-return constraint redundant: mean vector proportional to "
          "ones but mu0 differs from the common mean");
    }
  }

  const int M = cfg.knots;
  Philox rng(cfg.seed, 0);

  SplineQuantile model;
  model.knots = Eigen::VectorXd::LinSpaced(M + 1, 0.0, 1.0);
  Eigen::VectorXd delta(M + 1);
  for (int m = 0; m <= M; ++m) delta[m] = rng.uniform();
  model = SplineQuantile::from_deltas(0.0, model.knots, delta);

  Eigen::VectorXd beta = Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
  Eigen::VectorXd y = X * beta;
  model.gamma = cfg.gamma0.value_or(empirical_quantile(y, 0.01));

  FitResult res;
  res.objective_trace.reserve(static_cast<size_t>(cfg.max_iters) + 1);

  ScalarAdam adam_beta(p);
  Adam adam_theta(M + 2);
  // stop when the objective has been flat (relative change below rel_tol)
  // over a whole window; a single-step check would trip on the crossing
  // points of an oscillating trace
  constexpr int kStopWindow = 20;

  int t = 0;
  for (; t < cfg.max_iters; ++t) {
    UprObjectiveTerms terms = upr_objective_terms(y, model, cfg.eta);
    res.objective_trace.push_back(terms.value);
    if (!std::isfinite(terms.value) || !terms.grad_slopes.allFinite()) {
      throw numeric_error("non-finite objective or gradient; reduce the learning rate");
    }
    if (t >= kStopWindow) {
      const auto& tr = res.objective_trace;
      double lo = terms.value, hi = terms.value;
      for (int k = 1; k <= kStopWindow; ++k) {
        lo = std::min(lo, tr[tr.size() - 1 - k]);
        hi = std::max(hi, tr[tr.size() - 1 - k]);
      }
      if (hi - lo < cfg.rel_tol * std::max(1.0, std::abs(terms.value))) {
        res.converged = true;
        break;
      }
    }

    // delta gradient by the chain rule through b_m = delta_m - delta_{m-1}
    Eigen::VectorXd grad_delta(M + 1);
    for (int m = 0; m < M; ++m) {
      grad_delta[m] = terms.grad_slopes[m] - terms.grad_slopes[m + 1];
    }
    grad_delta[M] = terms.grad_slopes[M];

    double lr = cfg.learning_rate;
    switch (cfg.step_rule) {
      case StepRule::fixed:
        break;
      case StepRule::sqrt_decay:
        lr /= std::sqrt(static_cast<double>(t) + 1.0);
        break;
      case StepRule::adam:
        if (cfg.lr_decay_iters > 0.0) {
          lr /= std::sqrt(1.0 + static_cast<double>(t) / cfg.lr_decay_iters);
        }
        break;
    }

    if (fit_beta) {
      Eigen::VectorXd grad_beta =
          X.transpose() * terms.sample_weight / static_cast<double>(n);
      if (!grad_beta.allFinite()) {
        throw numeric_error("non-finite gradient; reduce the learning rate");
      }
      Eigen::VectorXd beta_tilde =
          cfg.step_rule == StepRule::adam
              ? (beta - adam_beta.step(grad_beta, lr)).eval()
              : (beta - lr * grad_beta).eval();
      beta = two_constraints ? project_weights(beta_tilde, mu_hat, mu0)
                             : project_weights(beta_tilde);
      y.noalias() = X * beta;
    }

    if (cfg.step_rule == StepRule::adam) {
      Eigen::VectorXd g(M + 2);
      g[0] = terms.grad_gamma;
      g.tail(M + 1) = grad_delta;
      Eigen::VectorXd upd = adam_theta.step(g, lr);
      model.gamma -= upd[0];
      delta = project_deltas(delta - upd.tail(M + 1));
    } else {
      model.gamma -= lr * terms.grad_gamma;
      delta = project_deltas(delta - lr * grad_delta);
    }
    if ((delta.array() == 0.0).all()) {
      // fully flat spline after projection: restart the slopes small
      for (int m = 0; m <= M; ++m) delta[m] = rng.uniform() * 1e-3;
    }
    model = SplineQuantile::from_deltas(model.gamma, model.knots, delta);

#ifndef NDEBUG
    assert(std::abs(beta.sum() - 1.0) <= 1e-10);
    if (two_constraints) {
      assert(std::abs(mu_hat.dot(beta) - mu0) <=
             1e-10 * std::max(1.0, std::abs(mu0)));
    }
    assert((delta.array() >= 0.0).all());
#endif
  }

  if (!res.converged) {
    // record the objective of the state actually returned
    res.objective_trace.push_back(upr_objective(y, model, cfg.eta));
  }
  res.iterations = t;
  res.weights.beta = beta;
  res.weights.mu_hat = mu_hat;
  res.weights.mu0 = two_constraints ? mu0 : mu_hat.dot(beta);
  res.model = model;
  return res;
}

}  // namespace

void FitConfig::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw validation_error("eta must lie in (0,1)");
  if (knots < 1) throw validation_error("need at least one spline segment");
  if (!(learning_rate > 0.0)) throw validation_error("learning rate must be positive");
  if (max_iters < 1) throw validation_error("max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw validation_error("rel_tol must be positive");
}

Eigen::VectorXd project_weights(Eigen::Ref<const Eigen::VectorXd> beta_tilde,
                                Eigen::Ref<const Eigen::VectorXd> mu_hat,
                                double mu0) {
  const auto p = static_cast<double>(beta_tilde.size());
  if (beta_tilde.size() != mu_hat.size()) {
    throw validation_error("weight and mean vectors must have equal length");
  }
  const double mumu = mu_hat.squaredNorm();
  const double s_mu = mu_hat.sum();
  const double den = p * mumu - s_mu * s_mu;
  if (den <= kDegenerateTol * p * mumu) {
    throw validation_error(
        "target-return constraint redundant: mean vector proportional to ones");
  }
  const double sum_b = beta_tilde.sum();
  const double mu_b = mu_hat.dot(beta_tilde);
  const double eta1 = (mumu * (sum_b - 1.0) - s_mu * (mu_b - mu0)) / den;
  const double eta2 =
      (s_mu * sum_b - s_mu - p * mu_b + p * mu0) / (s_mu * s_mu - p * mumu);
  return beta_tilde - Eigen::VectorXd::Constant(beta_tilde.size(), eta1) -
         eta2 * mu_hat;
}

Eigen::VectorXd project_weights(Eigen::Ref<const Eigen::VectorXd> beta_tilde) {
  const auto p = static_cast<double>(beta_tilde.size());
  const double shift = (beta_tilde.sum() - 1.0) / p;
  return beta_tilde.array() - shift;
}

Eigen::VectorXd project_deltas(Eigen::Ref<const Eigen::VectorXd> deltas) {
  return deltas.cwiseMax(0.0);
}

FitResult fit_upr_portfolio(const Eigen::MatrixXd& asset_returns,
                            const FitConfig& config) {
  return fit_impl(asset_returns, config, true);
}

FitResult fit_quantile_model_full(Eigen::Ref<const Eigen::VectorXd> samples,
                                  const FitConfig& config) {
  Eigen::MatrixXd X = samples;
  return fit_impl(X, config, false);
}

SplineQuantile fit_quantile_model(Eigen::Ref<const Eigen::VectorXd> samples,
                                  const FitConfig& config) {
  return fit_quantile_model_full(samples, config).model;
}

}  // namespace upr
