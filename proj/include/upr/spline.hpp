#pragma once

#include <Eigen/Core>
#include <string>

#include <json.hpp>

namespace upr {

// Linear isotonic regression spline g(a) = gamma + sum_m b_m (a - d_m)_+
// on [0, 1]. Knots are fixed with d_0 = 0 < ... < d_M = 1; the cumulative
// slope sums (deltas) must be nonnegative, strictly positive for a usable
// quantile model.
struct SplineQuantile {
  double gamma = 0.0;
  Eigen::VectorXd knots;   // d, size M+1
  Eigen::VectorXd slopes;  // b, size M+1

  Eigen::Index segment_count() const { return knots.size() - 1; }

  // delta_m = b_0 + ... + b_m: the slope of g on [d_m, d_{m+1}).
  Eigen::VectorXd deltas() const;

  // strict: all deltas > 0 (fitted model); otherwise >= 0 (mid-projection).
  void validate(bool strict = true) const;

  static SplineQuantile from_deltas(double gamma, const Eigen::VectorXd& knots,
                                    const Eigen::VectorXd& deltas);

  // Uniform knot grid m/M, identity-like unit slopes. Handy in tests.
  static SplineQuantile identity(int segments = 1);

  nlohmann::json to_json() const;
  static SplineQuantile from_json(const nlohmann::json& j);
};

double spline_eval(const SplineQuantile& model, double alpha);

// g at every knot (increasing when deltas >= 0).
Eigen::VectorXd spline_knot_values(const SplineQuantile& model);

// Inverse image of y clamped to [eta, 1]; exact round trip for
// y in [g(eta), g(1)].
double spline_invert(const SplineQuantile& model, double y, double eta);

// Two-column curve (alpha,value) on an evenly spaced grid, for plotting.
void write_quantile_curve(const SplineQuantile& model, const std::string& path,
                          int points = 201);

}  // namespace upr
