#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "upr/metrics.hpp"
#include "upr/optimizer.hpp"
#include "upr/panel.hpp"
#include "upr/spline.hpp"
#include "upr/weights.hpp"

namespace upr {

enum class ModelKind { ew, mv, qr, cqr1, cqr2, upr };

struct ModelSpec {
  ModelKind kind = ModelKind::ew;
  double qr_alpha = 0.1;

  std::string name() const;
  // "ew" | "mv" | "qr" | "cqr1" | "cqr2" | "upr"
  static ModelSpec parse(const std::string& token);
};

struct WindowResult {
  RollingWindow window;
  PortfolioWeights weights;
  Eigen::VectorXd oos_returns;
  std::optional<SplineQuantile> model;  // present for the UPR model
};

struct BacktestReport {
  std::string model_name;
  std::vector<WindowResult> per_window;
  Eigen::VectorXd concatenated_returns;
  MetricTable metrics;
  std::vector<std::pair<std::string, double>> sr_tests;  // vs other models
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static BacktestReport from_json(const nlohmann::json& j);
};

struct BacktestConfig {
  Eigen::Index window = 240;
  Eigen::Index horizon = 60;
  bool keep_partial = true;
  FitConfig fit;
  bool sr_tests = false;
  // 0: one thread per window up to the hardware count; the
  // UPR_OPT_THREADS environment variable caps this further.
  int threads = 0;
};

// Fits every model on each rolling window and records its returns over
// the evaluation range. A window where a constructor fails is skipped for
// that model and noted in the report warnings.
std::vector<BacktestReport> run_backtest(const ReturnPanel& panel,
                                         const std::vector<ModelSpec>& models,
                                         const BacktestConfig& config);

struct QuantileDiscrepancy {
  struct Row {
    double alpha = 0.0;
    double fitted = 0.0;
    double empirical = 0.0;
  };
  std::vector<Row> rows;
  double lower_mae = 0.0;  // mean absolute gap over alpha <= 0.2
  double upper_mae = 0.0;  // mean absolute gap over alpha >= 0.8
};

// Fitted quantile curve against empirical out-of-sample quantiles.
QuantileDiscrepancy quantile_discrepancy(const SplineQuantile& model,
                                         Eigen::Ref<const Eigen::VectorXd> oos_returns,
                                         const std::vector<double>& grid);

}  // namespace upr
