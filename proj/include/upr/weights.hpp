#pragma once

#include <Eigen/Core>

#include <json.hpp>

namespace upr {

// Portfolio weight vector together with the constraint data it was built
// against. 1'beta = 1 and mu_hat'beta = mu0 hold to 1e-10 for every
// constructor except the equal-weight one, which records its realized
// expected return as mu0.
struct PortfolioWeights {
  Eigen::VectorXd beta;
  double mu0 = 0.0;
  Eigen::VectorXd mu_hat;

  nlohmann::json to_json() const;
  static PortfolioWeights from_json(const nlohmann::json& j);
};

}  // namespace upr
