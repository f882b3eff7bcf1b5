#include "upr/objective.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "upr/errors.hpp"

namespace upr {

namespace {

// Knot-indexed tables reused across all samples of one evaluation.
struct SegmentTables {
  Eigen::VectorXd delta;   // cumulative slopes
  Eigen::VectorXd dbar;    // cumulative sum of b_m * d_m
  Eigen::VectorXd kv;      // g at knots
  Eigen::VectorXd B;       // 1 - (1-d)^2/2
  Eigen::VectorXd cflat;   // bracket value when the sample sits above d_m
  Eigen::VectorXd pre_bB;  // prefix sums of b*B
  Eigen::VectorXd suf_bc;  // suffix sums of b*cflat, exclusive
  double g_eta = 0.0;
  Eigen::Index seg_eta = 0;

  SegmentTables(const SplineQuantile& q, double eta) {
    const Eigen::Index n = q.knots.size();
    delta.resize(n);
    dbar.resize(n);
    kv.resize(n);
    B.resize(n);
    cflat.resize(n);
    pre_bB.resize(n);
    suf_bc.resize(n);
    double cd = 0.0, cbd = 0.0, cbb = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      const double d = q.knots[m];
      const double b = q.slopes[m];
      cd = std::max(cd + b, 0.0);  // absorb roundoff dips below zero
      cbd += b * d;
      delta[m] = cd;
      dbar[m] = cbd;
      kv[m] = q.gamma + cd * d - cbd;
      B[m] = 1.0 - (1.0 - d) * (1.0 - d) / 2.0;
      cflat[m] = B[m] - d + (d > 0.0 ? d * std::log(d) : 0.0);
      cbb += b * B[m];
      pre_bB[m] = cbb;
    }
    double acc = 0.0;
    for (Eigen::Index m = n - 1; m >= 0; --m) {
      suf_bc[m] = acc;
      acc += q.slopes[m] * cflat[m];
    }
    // segment containing eta (largest knot index with d_m <= eta)
    seg_eta = std::upper_bound(q.knots.data(), q.knots.data() + n, eta) -
              q.knots.data() - 1;
    g_eta = q.gamma + delta[seg_eta] * eta - dbar[seg_eta];
  }
};

}  // namespace

UprObjectiveTerms upr_objective_terms(Eigen::Ref<const Eigen::VectorXd> y,
                                      const SplineQuantile& model, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw validation_error("truncation level must lie in (0,1)");
  }
  model.validate(false);
  const Eigen::Index n = y.size();
  if (n == 0) throw validation_error("empty sample set");
  const Eigen::Index K = model.knots.size();

  SegmentTables tab(model, eta);

  UprObjectiveTerms out;
  out.sample_weight.resize(n);
  Eigen::VectorXd cnt = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd sum_a = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd sum_l = Eigen::VectorXd::Zero(K);
  double obj = 0.0, sum_w = 0.0;

  const double* kvp = tab.kv.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double yi = y[i];
    double alpha;
    Eigen::Index m;
    if (yi <= tab.g_eta) {
      alpha = eta;
      m = tab.seg_eta;
    } else if (yi >= kvp[K - 1]) {
      alpha = 1.0;
      m = K - 1;
    } else {
      m = std::upper_bound(kvp, kvp + K, yi) - kvp - 1;
      alpha = (yi - model.gamma + tab.dbar[m]) / tab.delta[m];
      alpha = std::clamp(alpha, eta, 1.0);
    }
    const double L = std::log(alpha);
    const double w = 1.0 - eta + L;
    obj += w * (yi - model.gamma) + tab.pre_bB[m] - alpha * tab.delta[m] +
           L * tab.dbar[m] + tab.suf_bc[m];
    out.sample_weight[i] = w;
    sum_w += w;
    cnt[m] += 1.0;
    sum_a[m] += alpha;
    sum_l[m] += L;
  }

  out.value = obj / static_cast<double>(n);
  out.grad_gamma = -sum_w / static_cast<double>(n);
  out.grad_slopes.resize(K);
  // suffix accumulation: samples with owning index >= m contribute the
  // alpha branch of the bracket, the rest the flat branch.
  double n_ge = 0.0, sa_ge = 0.0, sl_ge = 0.0;
  const auto total = static_cast<double>(n);
  for (Eigen::Index m = K - 1; m >= 0; --m) {
    n_ge += cnt[m];
    sa_ge += sum_a[m];
    sl_ge += sum_l[m];
    out.grad_slopes[m] = (tab.B[m] * n_ge - sa_ge + model.knots[m] * sl_ge +
                          (total - n_ge) * tab.cflat[m]) /
                         total;
  }
  return out;
}

double upr_objective(Eigen::Ref<const Eigen::VectorXd> y,
                     const SplineQuantile& model, double eta) {
  return upr_objective_terms(y, model, eta).value;
}

double upr_objective(const Eigen::MatrixXd& asset_returns,
                     Eigen::Ref<const Eigen::VectorXd> beta,
                     const SplineQuantile& model, double eta) {
  Eigen::VectorXd y = asset_returns * beta;
  return upr_objective_terms(y, model, eta).value;
}

UprGradients upr_gradients(const Eigen::MatrixXd& asset_returns,
                           Eigen::Ref<const Eigen::VectorXd> beta,
                           const SplineQuantile& model, double eta) {
  Eigen::VectorXd y = asset_returns * beta;
  UprObjectiveTerms terms = upr_objective_terms(y, model, eta);
  UprGradients g;
  g.beta = asset_returns.transpose() * terms.sample_weight /
           static_cast<double>(y.size());
  g.gamma = terms.grad_gamma;
  g.slopes = std::move(terms.grad_slopes);
  return g;
}

}  // namespace upr
