#include "upr/spline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "upr/errors.hpp"

namespace upr {

Eigen::VectorXd SplineQuantile::deltas() const {
  Eigen::VectorXd d(slopes.size());
  double acc = 0.0;
  for (Eigen::Index m = 0; m < slopes.size(); ++m) {
    acc += slopes[m];
    d[m] = acc;
  }
  return d;
}

void SplineQuantile::validate(bool strict) const {
  const Eigen::Index n = knots.size();
  if (n < 2 || slopes.size() != n) {
    throw validation_error("spline needs >= 2 knots and matching slopes");
  }
  if (knots[0] != 0.0 || knots[n - 1] != 1.0) {
    throw validation_error("knots must start at 0 and end at 1");
  }
  for (Eigen::Index m = 1; m < n; ++m) {
    if (!(knots[m] > knots[m - 1])) {
      throw validation_error("knots must be strictly increasing");
    }
  }
  double acc = 0.0;
  double scale = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    acc += slopes[m];
    scale = std::max(scale, std::abs(slopes[m]));
    // roundoff slack: rebuilding slopes from projected deltas can leave a
    // few-ulp dip below zero
    if (strict ? !(acc > 0.0) : acc < -1e-12 * (1.0 + scale)) {
      throw validation_error("cumulative slope sums must be positive");
    }
  }
  if (!std::isfinite(gamma)) throw validation_error("non-finite spline intercept");
}

SplineQuantile SplineQuantile::from_deltas(double gamma,
                                           const Eigen::VectorXd& knots,
                                           const Eigen::VectorXd& deltas) {
  SplineQuantile q;
  q.gamma = gamma;
  q.knots = knots;
  q.slopes.resize(deltas.size());
  for (Eigen::Index m = 0; m < deltas.size(); ++m) {
    q.slopes[m] = m == 0 ? deltas[0] : deltas[m] - deltas[m - 1];
  }
  return q;
}

SplineQuantile SplineQuantile::identity(int segments) {
  SplineQuantile q;
  q.gamma = 0.0;
  q.knots = Eigen::VectorXd::LinSpaced(segments + 1, 0.0, 1.0);
  q.slopes = Eigen::VectorXd::Zero(segments + 1);
  q.slopes[0] = 1.0;
  return q;
}

double spline_eval(const SplineQuantile& model, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw validation_error("spline argument must lie in [0,1]");
  }
  double acc = model.gamma;
  for (Eigen::Index m = 0; m < model.slopes.size(); ++m) {
    double h = alpha - model.knots[m];
    if (h <= 0.0) break;  // knots increase, later hinges vanish too
    acc += model.slopes[m] * h;
  }
  return acc;
}

Eigen::VectorXd spline_knot_values(const SplineQuantile& model) {
  const Eigen::Index n = model.knots.size();
  Eigen::VectorXd vals(n);
  double acc = model.gamma;
  vals[0] = acc;
  double slope = 0.0;
  for (Eigen::Index m = 1; m < n; ++m) {
    slope = std::max(slope + model.slopes[m - 1], 0.0);
    acc += slope * (model.knots[m] - model.knots[m - 1]);
    vals[m] = acc;
  }
  return vals;
}

double spline_invert(const SplineQuantile& model, double y, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw validation_error("truncation level must lie in (0,1)");
  }
  const Eigen::VectorXd kv = spline_knot_values(model);
  if (y <= spline_eval(model, eta)) return eta;
  if (y >= kv[kv.size() - 1]) return 1.0;
  // largest m with g(d_m) <= y; the segment slope there is positive
  // because g(d_{m+1}) > y >= g(d_m).
  auto it = std::upper_bound(kv.data(), kv.data() + kv.size(), y);
  Eigen::Index m = (it - kv.data()) - 1;
  double bbar = 0.0, dbar = 0.0;
  for (Eigen::Index j = 0; j <= m; ++j) {
    bbar += model.slopes[j];
    dbar += model.slopes[j] * model.knots[j];
  }
  double alpha = (y - model.gamma + dbar) / bbar;
  return std::clamp(alpha, eta, 1.0);
}

nlohmann::json SplineQuantile::to_json() const {
  nlohmann::json j;
  j["gamma"] = gamma;
  j["knots"] = std::vector<double>(knots.data(), knots.data() + knots.size());
  j["slopes"] = std::vector<double>(slopes.data(), slopes.data() + slopes.size());
  return j;
}

SplineQuantile SplineQuantile::from_json(const nlohmann::json& j) {
  SplineQuantile q;
  q.gamma = j.at("gamma").get<double>();
  auto k = j.at("knots").get<std::vector<double>>();
  auto s = j.at("slopes").get<std::vector<double>>();
  q.knots = Eigen::Map<const Eigen::VectorXd>(k.data(), static_cast<Eigen::Index>(k.size()));
  q.slopes = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  q.validate(false);
  return q;
}

void write_quantile_curve(const SplineQuantile& model, const std::string& path,
                          int points) {
  if (points < 2) throw validation_error("curve needs >= 2 points");
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write file: " + path);
  out << "alpha,value\n";
  char buf[80];
  for (int i = 0; i < points; ++i) {
    double a = static_cast<double>(i) / (points - 1);
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", a, spline_eval(model, a));
    out << buf;
  }
}

}  // namespace upr
