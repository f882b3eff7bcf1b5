#include "upr/portfolios.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "upr/errors.hpp"

namespace upr {

namespace {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(n - 1);
}

double composite_objective(const Eigen::VectorXd& y,
                           const RiskLevelGrid& grid,
                           Eigen::Ref<const Eigen::VectorXd> loss_weights,
                           Eigen::VectorXd* intercepts) {
  const Eigen::Index K = grid.levels.size();
  const auto n = static_cast<double>(y.size());
  double total = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double a = grid.levels[k];
    const double q = empirical_quantile(y, a);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double z = y[i] - q;
      acc += (a - (z < 0.0 ? 1.0 : 0.0)) * z;
    }
    total += loss_weights[k] * acc / n;
    if (intercepts) (*intercepts)[k] = q;
  }
  return total;
}

}  // namespace

nlohmann::json PortfolioWeights::to_json() const {
  nlohmann::json j;
  j["beta"] = std::vector<double>(beta.data(), beta.data() + beta.size());
  j["mu0"] = mu0;
  j["mu_hat"] =
      std::vector<double>(mu_hat.data(), mu_hat.data() + mu_hat.size());
  return j;
}

PortfolioWeights PortfolioWeights::from_json(const nlohmann::json& j) {
  PortfolioWeights w;
  auto b = j.at("beta").get<std::vector<double>>();
  auto m = j.at("mu_hat").get<std::vector<double>>();
  w.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  w.mu_hat = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  w.mu0 = j.at("mu0").get<double>();
  return w;
}

PortfolioWeights equal_weight(Eigen::Index p) {
  if (p < 1) throw validation_error("need at least one asset");
  PortfolioWeights w;
  w.beta = Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
  w.mu_hat = Eigen::VectorXd::Zero(p);
  w.mu0 = 0.0;
  return w;
}

PortfolioWeights equal_weight(const Eigen::MatrixXd& asset_returns) {
  PortfolioWeights w = equal_weight(asset_returns.cols());
  w.mu_hat = asset_returns.colwise().mean();
  w.mu0 = w.mu_hat.dot(w.beta);
  return w;
}

PortfolioWeights mean_variance(const Eigen::MatrixXd& asset_returns,
                               double mu0) {
  const Eigen::Index n = asset_returns.rows();
  const Eigen::Index p = asset_returns.cols();
  if (n < 2) throw validation_error("need at least 2 return rows");
  if (p < 1) throw validation_error("need at least one asset");

  const Eigen::VectorXd mu_hat = asset_returns.colwise().mean();
  Eigen::MatrixXd sigma = sample_covariance(asset_returns);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);

  auto solve_pair = [&](const Eigen::MatrixXd& S, Eigen::VectorXd* si1,
                        Eigen::VectorXd* sim) -> bool {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success) return false;
    *si1 = ldlt.solve(ones);
    *sim = ldlt.solve(mu_hat);
    return si1->allFinite() && sim->allFinite() &&
           (S * *si1 - ones).norm() <= 1e-8 * std::sqrt(static_cast<double>(p));
  };

  Eigen::VectorXd si1, sim;
  if (!solve_pair(sigma, &si1, &sim)) {
    const double ridge = 1e-8 * sigma.trace() / static_cast<double>(p);
    Eigen::MatrixXd patched =
        sigma + ridge * Eigen::MatrixXd::Identity(p, p);
    if (!solve_pair(patched, &si1, &sim)) {
      throw numeric_error("covariance matrix singular even after ridge");
    }
  }

  const double a = ones.dot(si1);
  const double b = ones.dot(sim);
  const double c = mu_hat.dot(sim);
  const double det = a * c - b * b;
  if (det <= 1e-12 * std::abs(a * c) || !std::isfinite(det)) {
    // mean vector proportional to ones: the target-return constraint is
    // redundant; accept the plain minimum-variance weights if consistent
    PortfolioWeights w;
    w.beta = si1 / a;
    w.mu_hat = mu_hat;
    const double realized = mu_hat.dot(w.beta);
    if (std::abs(realized - mu0) > 1e-8 * std::max(1.0, std::abs(mu0))) {
      throw validation_error(
          "degenerate mean vector: target return unreachable");
    }
    w.mu0 = mu0;
    return w;
  }
  const double lam1 = (c - b * mu0) / det;
  const double lam2 = (a * mu0 - b) / det;
  PortfolioWeights w;
  w.beta = lam1 * si1 + lam2 * sim;
  w.mu_hat = mu_hat;
  w.mu0 = mu0;
  return w;
}

CompositeQrFit fit_composite_qr(const Eigen::MatrixXd& asset_returns,
                                const RiskLevelGrid& grid,
                                Eigen::Ref<const Eigen::VectorXd> loss_weights,
                                double mu0, const FitConfig& config) {
  config.validate();
  grid.validate();
  if (loss_weights.size() != grid.levels.size()) {
    throw validation_error("one loss weight per level required");
  }
  for (Eigen::Index k = 0; k < grid.levels.size(); ++k) {
    if (!(grid.levels[k] < 1.0)) {
      throw validation_error("quantile-loss levels must lie in (0,1)");
    }
  }
  const Eigen::Index n = asset_returns.rows();
  const Eigen::Index p = asset_returns.cols();
  if (n < 2) throw validation_error("need at least 2 return rows");
  if (p < 2) throw validation_error("need at least 2 assets");
  const Eigen::Index K = grid.levels.size();

  const Eigen::VectorXd mu_hat = asset_returns.colwise().mean();
  Eigen::VectorXd beta = project_weights(
      Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p)), mu_hat, mu0);

  Eigen::VectorXd intercepts(K);
  Eigen::VectorXd y = asset_returns * beta;
  double best = composite_objective(y, grid, loss_weights, &intercepts);
  Eigen::VectorXd best_beta = beta;

  int t = 0;
  for (; t < config.max_iters; ++t) {
    // subgradient at (beta, exact intercepts)
    Eigen::VectorXd der = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < K; ++k) {
      const double a = grid.levels[k];
      const double q = intercepts[k];
      for (Eigen::Index i = 0; i < n; ++i) {
        der[i] += loss_weights[k] * (a - (y[i] - q < 0.0 ? 1.0 : 0.0));
      }
    }
    Eigen::VectorXd g = asset_returns.transpose() * der / static_cast<double>(n);
    const double gn = g.norm();
    if (!std::isfinite(gn)) throw numeric_error("non-finite subgradient");
    if (gn < 1e-15) break;
    const double step = config.learning_rate /
                        (std::sqrt(static_cast<double>(t) + 1.0) * gn);
    beta = project_weights(beta - step * g, mu_hat, mu0);
    y.noalias() = asset_returns * beta;
    const double val = composite_objective(y, grid, loss_weights, &intercepts);
    if (val < best) {
      best = val;
      best_beta = beta;
    }
  }

  CompositeQrFit fit;
  fit.weights.beta = best_beta;
  fit.weights.mu_hat = mu_hat;
  fit.weights.mu0 = mu0;
  fit.intercepts.resize(K);
  Eigen::VectorXd yb = asset_returns * best_beta;
  fit.objective = composite_objective(yb, grid, loss_weights, &fit.intercepts);
  fit.iterations = t;
  return fit;
}

PortfolioWeights qr_portfolio(const Eigen::MatrixXd& asset_returns,
                              double alpha, double mu0,
                              const FitConfig& config) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw validation_error("quantile level must lie in (0,1)");
  }
  RiskLevelGrid grid = RiskLevelGrid::single(alpha);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  return fit_composite_qr(asset_returns, grid, w, mu0, config).weights;
}

PortfolioWeights cqr_portfolio(const Eigen::MatrixXd& asset_returns,
                               const RiskLevelGrid& grid, double mu0,
                               const FitConfig& config) {
  grid.validate();
  Eigen::VectorXd w = grid.weights;
  if (config.cqr_weights_as_measure) {
    w = w.cwiseQuotient(grid.levels);
  }
  return fit_composite_qr(asset_returns, grid, w, mu0, config).weights;
}

RiskLevelGrid cqr1_grid() {
  RiskLevelGrid g;
  g.levels = Eigen::Vector3d(0.1, 0.5, 0.9);
  g.weights = Eigen::Vector3d(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  return g;
}

RiskLevelGrid cqr2_grid() {
  RiskLevelGrid g;
  g.levels = Eigen::Vector4d(0.01, 0.1, 0.5, 0.9);
  g.weights = Eigen::Vector4d(0.4, 0.3, 0.2, 0.1);
  return g;
}

}  // namespace upr
