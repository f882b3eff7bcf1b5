#include "upr/metrics.hpp"

#include <cmath>

#include "upr/errors.hpp"
#include "upr/risk.hpp"

namespace upr {

namespace {

void check_nonempty(Eigen::Ref<const Eigen::VectorXd> r) {
  if (r.size() == 0) throw validation_error("empty return series");
}

double sample_sd(Eigen::Ref<const Eigen::VectorXd> r) {
  const auto n = static_cast<double>(r.size());
  const double mean = r.mean();
  return std::sqrt((r.array() - mean).square().sum() / (n - 1.0));
}

}  // namespace

double cumulative_wealth(Eigen::Ref<const Eigen::VectorXd> r) {
  check_nonempty(r);
  return 1.0 + r.sum();
}

double cumulative_wealth_compound(Eigen::Ref<const Eigen::VectorXd> r) {
  check_nonempty(r);
  return (1.0 + r.array()).prod();
}

double max_drawdown(Eigen::Ref<const Eigen::VectorXd> r) {
  check_nonempty(r);
  double wealth = 1.0;
  double peak = 1.0;
  double worst = 0.0;
  for (Eigen::Index t = 0; t < r.size(); ++t) {
    wealth += r[t];
    if (wealth > peak) peak = wealth;
    if (peak <= 0.0) throw numeric_error("wealth path peak not positive");
    worst = std::min(worst, (wealth - peak) / peak);
  }
  return worst;
}

double max_loss(Eigen::Ref<const Eigen::VectorXd> r) {
  check_nonempty(r);
  return -r.minCoeff();
}

double cvar_01(Eigen::Ref<const Eigen::VectorXd> r) {
  return empirical_alpha_risk(r, 0.1);
}

double sharpe(Eigen::Ref<const Eigen::VectorXd> r) {
  check_nonempty(r);
  if (r.size() < 2) throw validation_error("sharpe needs at least 2 returns");
  const double sd = sample_sd(r);
  if (!(sd > 0.0)) throw numeric_error("zero-variance return series");
  return r.mean() / sd;
}

MetricTable compute_metrics(Eigen::Ref<const Eigen::VectorXd> r) {
  MetricTable m;
  m.cw = cumulative_wealth(r);
  m.max_loss = max_loss(r);
  m.mdd = max_drawdown(r);
  m.cvar01 = cvar_01(r);
  m.sr = sharpe(r);
  return m;
}

double sr_test(Eigen::Ref<const Eigen::VectorXd> r_i,
               Eigen::Ref<const Eigen::VectorXd> r_j) {
  if (r_i.size() != r_j.size()) {
    throw validation_error("series must have equal length");
  }
  const Eigen::Index L = r_i.size();
  if (L < 3) throw validation_error("need at least 3 observations");
  if ((r_i.array() == r_j.array()).all()) return 0.0;

  const auto n = static_cast<double>(L);
  const double mi = r_i.mean();
  const double mj = r_j.mean();
  const double si = sample_sd(r_i);
  const double sj = sample_sd(r_j);
  const double sij =
      ((r_i.array() - mi) * (r_j.array() - mj)).sum() / (n - 1.0);

  const double theta =
      (2.0 * si * si * sj * sj - 2.0 * si * sj * sij +
       0.5 * (mi * mi * sj * sj + mj * mj * si * si) -
       (mi * mj / (si * sj)) * sij * sij) /
      n;
  if (!(theta > 0.0)) throw numeric_error("degenerate series pair in SR test");
  return (mi * sj - mj * si) / std::sqrt(theta);
}

}  // namespace upr
