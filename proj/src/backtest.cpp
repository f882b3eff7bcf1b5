#include "upr/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "upr/errors.hpp"
#include "upr/portfolios.hpp"
#include "upr/risk.hpp"
#include "upr/rng.hpp"

namespace upr {

namespace {

int resolve_threads(int requested, size_t tasks) {
  unsigned hw = std::thread::hardware_concurrency();
  int n = requested > 0 ? requested : static_cast<int>(hw ? hw : 1);
  if (const char* env = std::getenv("UPR_OPT_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, std::min<int>(n, static_cast<int>(tasks)));
}

struct WindowOutcome {
  bool ok = false;
  std::string error;
  WindowResult result;
};

WindowOutcome fit_window(const Eigen::MatrixXd& X, const ModelSpec& spec,
                         const RollingWindow& w, const BacktestConfig& cfg,
                         size_t window_index) {
  WindowOutcome out;
  out.result.window = w;
  const Eigen::MatrixXd fitX = X.middleRows(w.fit_start, w.fit_rows());
  const Eigen::MatrixXd evalX = X.middleRows(w.eval_start, w.eval_rows());
  FitConfig fit = cfg.fit;
  fit.seed = mix_seed(cfg.fit.seed, window_index);
  const double mu0 =
      fit.mu0.value_or(fitX.colwise().mean().mean());  // equal-weight mean
  try {
    switch (spec.kind) {
      case ModelKind::ew:
        out.result.weights = equal_weight(fitX);
        break;
      case ModelKind::mv:
        out.result.weights = mean_variance(fitX, mu0);
        break;
      case ModelKind::qr:
        out.result.weights = qr_portfolio(fitX, spec.qr_alpha, mu0, fit);
        break;
      case ModelKind::cqr1:
        out.result.weights = cqr_portfolio(fitX, cqr1_grid(), mu0, fit);
        break;
      case ModelKind::cqr2:
        out.result.weights = cqr_portfolio(fitX, cqr2_grid(), mu0, fit);
        break;
      case ModelKind::upr: {
        FitResult r = fit_upr_portfolio(fitX, fit);
        out.result.weights = r.weights;
        out.result.model = r.model;
        break;
      }
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  out.result.oos_returns = evalX * out.result.weights.beta;
  out.ok = true;
  return out;
}

}  // namespace

std::string ModelSpec::name() const {
  switch (kind) {
    case ModelKind::ew: return "ew";
    case ModelKind::mv: return "mv";
    case ModelKind::qr: return "qr";
    case ModelKind::cqr1: return "cqr1";
    case ModelKind::cqr2: return "cqr2";
    case ModelKind::upr: return "upr";
  }
  return "?";
}

ModelSpec ModelSpec::parse(const std::string& token) {
  ModelSpec s;
  if (token == "ew") s.kind = ModelKind::ew;
  else if (token == "mv") s.kind = ModelKind::mv;
  else if (token == "qr") s.kind = ModelKind::qr;
  else if (token == "cqr1") s.kind = ModelKind::cqr1;
  else if (token == "cqr2") s.kind = ModelKind::cqr2;
  else if (token == "upr") s.kind = ModelKind::upr;
  else throw validation_error("unknown model name: " + token);
  return s;
}

std::vector<BacktestReport> run_backtest(const ReturnPanel& panel,
                                         const std::vector<ModelSpec>& models,
                                         const BacktestConfig& config) {
  panel.validate();
  if (models.empty()) throw validation_error("no models requested");
  const std::vector<RollingWindow> windows = rolling_windows(
      panel.rows(), config.window, config.horizon, config.keep_partial);
  const Eigen::MatrixXd& X = panel.returns;

  const size_t n_tasks = windows.size() * models.size();
  std::vector<WindowOutcome> outcomes(n_tasks);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t idx = next.fetch_add(1);
      if (idx >= n_tasks) return;
      const size_t wi = idx / models.size();
      const size_t mi = idx % models.size();
      outcomes[idx] = fit_window(X, models[mi], windows[wi], config, wi);
    }
  };
  const int n_threads = resolve_threads(config.threads, n_tasks);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<BacktestReport> reports(models.size());
  for (size_t mi = 0; mi < models.size(); ++mi) {
    BacktestReport& rep = reports[mi];
    rep.model_name = models[mi].name();
    Eigen::Index total = 0;
    for (size_t wi = 0; wi < windows.size(); ++wi) {
      const WindowOutcome& o = outcomes[wi * models.size() + mi];
      if (!o.ok) {
        rep.warnings.push_back("window " + std::to_string(wi) +
                               " skipped: " + o.error);
        continue;
      }
      rep.per_window.push_back(o.result);
      total += o.result.oos_returns.size();
    }
    rep.concatenated_returns.resize(total);
    Eigen::Index at = 0;
    for (const auto& wr : rep.per_window) {
      rep.concatenated_returns.segment(at, wr.oos_returns.size()) =
          wr.oos_returns;
      at += wr.oos_returns.size();
    }
    if (total > 1) {
      rep.metrics = compute_metrics(rep.concatenated_returns);
    } else {
      rep.warnings.push_back("too few out-of-sample returns for metrics");
    }
  }

  if (config.sr_tests) {
    for (size_t i = 0; i < reports.size(); ++i) {
      for (size_t j = 0; j < reports.size(); ++j) {
        if (i == j) continue;
        try {
          reports[i].sr_tests.emplace_back(
              reports[j].model_name,
              sr_test(reports[i].concatenated_returns,
                      reports[j].concatenated_returns));
        } catch (const std::exception& e) {
          reports[i].warnings.push_back("sr test vs " + reports[j].model_name +
                                        " failed: " + e.what());
        }
      }
    }
  }
  return reports;
}

QuantileDiscrepancy quantile_discrepancy(
    const SplineQuantile& model, Eigen::Ref<const Eigen::VectorXd> oos_returns,
    const std::vector<double>& grid) {
  if (oos_returns.size() == 0) throw validation_error("empty return series");
  if (grid.empty()) throw validation_error("empty level grid");
  QuantileDiscrepancy out;
  double lo_sum = 0.0, hi_sum = 0.0;
  int lo_n = 0, hi_n = 0;
  for (double a : grid) {
    QuantileDiscrepancy::Row row;
    row.alpha = a;
    row.fitted = spline_eval(model, a);
    row.empirical = empirical_quantile(oos_returns, a);
    out.rows.push_back(row);
    const double gap = std::abs(row.fitted - row.empirical);
    if (a <= 0.2) {
      lo_sum += gap;
      ++lo_n;
    }
    if (a >= 0.8) {
      hi_sum += gap;
      ++hi_n;
    }
  }
  out.lower_mae = lo_n ? lo_sum / lo_n : 0.0;
  out.upper_mae = hi_n ? hi_sum / hi_n : 0.0;
  return out;
}

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json BacktestReport::to_json() const {
  nlohmann::json j;
  j["model"] = model_name;
  j["concatenated_returns"] = vec_to_json(concatenated_returns);
  j["metrics"] = {{"cw", metrics.cw},
                  {"max_loss", metrics.max_loss},
                  {"mdd", metrics.mdd},
                  {"cvar01", metrics.cvar01},
                  {"sr", metrics.sr}};
  j["warnings"] = warnings;
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& [other, z] : sr_tests) {
    tests.push_back({{"vs", other}, {"z", z}});
  }
  j["sr_tests"] = tests;
  nlohmann::json wins = nlohmann::json::array();
  for (const auto& wr : per_window) {
    nlohmann::json w;
    w["fit_start"] = wr.window.fit_start;
    w["fit_end"] = wr.window.fit_end;
    w["eval_start"] = wr.window.eval_start;
    w["eval_end"] = wr.window.eval_end;
    w["weights"] = wr.weights.to_json();
    w["oos_returns"] = vec_to_json(wr.oos_returns);
    if (wr.model) w["spline"] = wr.model->to_json();
    wins.push_back(std::move(w));
  }
  j["windows"] = wins;
  return j;
}

BacktestReport BacktestReport::from_json(const nlohmann::json& j) {
  BacktestReport rep;
  rep.model_name = j.at("model").get<std::string>();
  rep.concatenated_returns = vec_from_json(j.at("concatenated_returns"));
  const auto& m = j.at("metrics");
  rep.metrics.cw = m.at("cw").get<double>();
  rep.metrics.max_loss = m.at("max_loss").get<double>();
  rep.metrics.mdd = m.at("mdd").get<double>();
  rep.metrics.cvar01 = m.at("cvar01").get<double>();
  rep.metrics.sr = m.at("sr").get<double>();
  rep.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& t : j.at("sr_tests")) {
    rep.sr_tests.emplace_back(t.at("vs").get<std::string>(),
                              t.at("z").get<double>());
  }
  for (const auto& w : j.at("windows")) {
    WindowResult wr;
    wr.window.fit_start = w.at("fit_start").get<Eigen::Index>();
    wr.window.fit_end = w.at("fit_end").get<Eigen::Index>();
    wr.window.eval_start = w.at("eval_start").get<Eigen::Index>();
    wr.window.eval_end = w.at("eval_end").get<Eigen::Index>();
    wr.weights = PortfolioWeights::from_json(w.at("weights"));
    wr.oos_returns = vec_from_json(w.at("oos_returns"));
    if (w.contains("spline")) {
      wr.model = SplineQuantile::from_json(w.at("spline"));
    }
    rep.per_window.push_back(std::move(wr));
  }
  return rep;
}

}  // namespace upr
