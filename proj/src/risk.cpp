#include "upr/risk.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "upr/errors.hpp"

namespace upr {

namespace {

// ceil(n*alpha) with protection against 2.0000000000000004-style noise.
Eigen::Index tail_count(Eigen::Index n, double alpha) {
  double prod = static_cast<double>(n) * alpha;
  auto k = static_cast<Eigen::Index>(
      std::ceil(prod - 1e-9 * std::max(1.0, prod)));
  return std::clamp<Eigen::Index>(k, 1, n);
}

// Ascending copy plus prefix sums; lets one sort serve a whole level grid.
struct SortedPrefix {
  std::vector<double> sorted;
  std::vector<double> prefix;  // prefix[k] = sum of k smallest

  explicit SortedPrefix(Eigen::Ref<const Eigen::VectorXd> samples) {
    sorted.assign(samples.data(), samples.data() + samples.size());
    std::sort(sorted.begin(), sorted.end());
    prefix.resize(sorted.size() + 1);
    prefix[0] = 0.0;
    for (size_t i = 0; i < sorted.size(); ++i) {
      prefix[i + 1] = prefix[i] + sorted[i];
    }
  }

  double alpha_risk(double alpha) const {
    auto n = static_cast<Eigen::Index>(sorted.size());
    Eigen::Index k = tail_count(n, alpha);
    return -prefix[static_cast<size_t>(k)] / static_cast<double>(k);
  }
};

void check_nonempty(Eigen::Ref<const Eigen::VectorXd> samples) {
  if (samples.size() == 0) throw validation_error("empty sample set");
}

}  // namespace

double quantile_loss(double alpha, double z) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw validation_error("quantile loss level must lie in (0,1)");
  }
  return (alpha - (z < 0.0 ? 1.0 : 0.0)) * z;
}

double empirical_quantile(Eigen::Ref<const Eigen::VectorXd> samples,
                          double alpha) {
  check_nonempty(samples);
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw validation_error("quantile level must lie in (0,1]");
  }
  std::vector<double> v(samples.data(), samples.data() + samples.size());
  Eigen::Index k = tail_count(samples.size(), alpha);
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
  return v[static_cast<size_t>(k - 1)];
}

double empirical_alpha_risk(Eigen::Ref<const Eigen::VectorXd> samples,
                            double alpha) {
  check_nonempty(samples);
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw validation_error("risk level must lie in (0,1]");
  }
  Eigen::Index k = tail_count(samples.size(), alpha);
  std::vector<double> v(samples.data(), samples.data() + samples.size());
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) sum += v[static_cast<size_t>(i)];
  return -sum / static_cast<double>(k);
}

RiskLevelGrid RiskLevelGrid::single(double level) {
  RiskLevelGrid g;
  g.levels = Eigen::VectorXd::Constant(1, level);
  g.weights = Eigen::VectorXd::Ones(1);
  g.validate();
  return g;
}

RiskLevelGrid RiskLevelGrid::uniform(int K) {
  if (K < 1) throw validation_error("grid size must be >= 1");
  RiskLevelGrid g;
  g.levels = Eigen::VectorXd::LinSpaced(K, 1.0 / K, 1.0);
  g.weights = Eigen::VectorXd::Constant(K, 1.0 / K);
  return g;
}

void RiskLevelGrid::validate() const {
  if (levels.size() == 0 || levels.size() != weights.size()) {
    throw validation_error("risk grid needs matching nonempty levels/weights");
  }
  for (Eigen::Index k = 0; k < levels.size(); ++k) {
    if (!(levels[k] > 0.0 && levels[k] <= 1.0)) {
      throw validation_error("risk levels must lie in (0,1]");
    }
    if (k > 0 && levels[k] <= levels[k - 1]) {
      throw validation_error("risk levels must be strictly increasing");
    }
    if (weights[k] < 0.0) throw validation_error("risk weights must be nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    throw validation_error("risk weights must sum to 1");
  }
}

double discrete_pessimistic_risk(Eigen::Ref<const Eigen::VectorXd> samples,
                                 const RiskLevelGrid& grid) {
  check_nonempty(samples);
  grid.validate();
  SortedPrefix sp(samples);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < grid.levels.size(); ++k) {
    acc += grid.weights[k] * sp.alpha_risk(grid.levels[k]);
  }
  return acc;
}

double upr_via_grid(Eigen::Ref<const Eigen::VectorXd> samples, int K) {
  check_nonempty(samples);
  if (K < 1) throw validation_error("grid size must be >= 1");
  SortedPrefix sp(samples);
  double acc = 0.0;
  for (int k = 1; k <= K; ++k) {
    acc += sp.alpha_risk(static_cast<double>(k) / K);
  }
  return acc / K;
}

double distortion_phi(double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw validation_error("distortion argument must lie in (0,1]");
  }
  return -t * std::log(t) + t;
}

void BetaDistortion::validate() const {
  if (!(s >= 1.0 && h >= 1.0)) {
    throw validation_error("beta distortion requires s >= 1 and h >= 1");
  }
}

double BetaDistortion::density(double alpha) const {
  validate();
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw validation_error("beta density argument must lie in (0,1)");
  }
  double log_b = std::lgamma(s) + std::lgamma(h) - std::lgamma(s + h);
  return std::exp((s - 1.0) * std::log(alpha) + (h - 1.0) * std::log1p(-alpha) -
                  log_b);
}

double beta_distortion_risk(Eigen::Ref<const Eigen::VectorXd> samples,
                            const BetaDistortion& beta, int K) {
  check_nonempty(samples);
  beta.validate();
  if (K < 1) throw validation_error("grid size must be >= 1");
  SortedPrefix sp(samples);
  double acc = 0.0;
  for (int k = 1; k <= K; ++k) {
    double a = (k - 0.5) / K;
    acc += sp.alpha_risk(a) * beta.density(a);
  }
  return acc / K;
}

double gev_beta_risk_analytic(double xi, double zeta, double kappa, double s) {
  if (zeta <= 0.0) throw validation_error("GEV scale must be positive");
  if (kappa <= -1.0) throw validation_error("GEV with kappa <= -1 has no finite mean");
  if (kappa == 0.0) throw validation_error("kappa = 0 (Gumbel) not supported by the closed form");
  if (s < 1.0) throw validation_error("closed form requires s >= 1");
  const double a = zeta * std::tgamma(1.0 + kappa) / kappa;
  const double c = -xi - zeta / kappa;
  if (s == 1.0) return a * (1.0 + kappa) + c;  // right limit at s = 1
  return a * (s - std::pow(s, -kappa)) / (s - 1.0) + c;
}

double gev_quantile(double xi, double zeta, double kappa, double p) {
  if (!(p > 0.0 && p < 1.0)) throw validation_error("probability must lie in (0,1)");
  if (kappa == 0.0) return xi - zeta * std::log(-std::log(p));
  return xi + zeta * (1.0 - std::pow(-std::log(p), kappa)) / kappa;
}

}  // namespace upr
