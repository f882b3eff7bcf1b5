#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "upr/backtest.hpp"
#include "upr/errors.hpp"
#include "upr/optimizer.hpp"
#include "upr/panel.hpp"
#include "upr/portfolios.hpp"
#include "upr/simulate.hpp"

namespace {

namespace fs = std::filesystem;

struct CommonFitFlags {
  double eta = 1e-5;
  int knots = 19;
  double lr = 0.01;
  int max_iters = 10000;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::string mu0 = "ew";
  std::string step_rule = "adam";

  void attach(CLI::App* cmd) {
    cmd->add_option("--eta", eta, "truncation level of the risk integral");
    cmd->add_option("--knots", knots, "spline segment count M (knot grid m/M)");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--max-iters", max_iters, "iteration cap");
    cmd->add_option("--tol", tol, "relative objective-change stopping rule");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--mu0", mu0,
                    "target return: 'ew' (equal-weight mean) or a number");
    cmd->add_option("--step-rule", step_rule, "adam | fixed | sqrt-decay")
        ->check(CLI::IsMember({"adam", "fixed", "sqrt-decay"}));
  }

  upr::FitConfig to_config() const {
    upr::FitConfig cfg;
    cfg.eta = eta;
    cfg.knots = knots;
    cfg.learning_rate = lr;
    cfg.max_iters = max_iters;
    cfg.rel_tol = tol;
    cfg.seed = seed;
    if (mu0 != "ew") cfg.mu0 = std::stod(mu0);
    if (step_rule == "fixed") cfg.step_rule = upr::StepRule::fixed;
    else if (step_rule == "sqrt-decay") cfg.step_rule = upr::StepRule::sqrt_decay;
    else cfg.step_rule = upr::StepRule::adam;
    cfg.validate();
    return cfg;
  }
};

std::vector<upr::ModelSpec> parse_models(const std::string& csv) {
  std::vector<upr::ModelSpec> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(upr::ModelSpec::parse(tok));
  }
  if (out.empty()) throw upr::validation_error("no models given");
  return out;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw upr::validation_error("cannot write " + path.string());
  out << body;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_ingest(const std::string& prices_csv, const std::string& out_csv) {
  std::vector<std::string> dropped;
  upr::PricePanel panel = upr::load_prices(prices_csv, &dropped);
  for (const auto& t : dropped) {
    std::cerr << "warning: dropped " << t << " (missing values)\n";
  }
  upr::ReturnPanel returns = upr::to_log_returns(panel);
  upr::write_returns(returns, out_csv);
  std::cout << "wrote " << returns.rows() << " return rows x "
            << returns.assets() << " assets to " << out_csv << "\n";
  return 0;
}

int cmd_fit(const std::string& returns_csv, const std::string& model,
            const CommonFitFlags& flags, const std::string& out_dir) {
  upr::ReturnPanel panel = upr::load_returns(returns_csv);
  upr::FitConfig cfg = flags.to_config();
  const double mu0 =
      cfg.mu0.value_or(panel.returns.colwise().mean().mean());
  upr::ModelSpec spec = upr::ModelSpec::parse(model);

  fs::create_directories(out_dir);
  nlohmann::json out;
  out["model"] = spec.name();
  out["mu0"] = mu0;
  out["seed"] = cfg.seed;

  switch (spec.kind) {
    case upr::ModelKind::ew:
      out["weights"] = upr::equal_weight(panel.returns).to_json();
      break;
    case upr::ModelKind::mv:
      out["weights"] = upr::mean_variance(panel.returns, mu0).to_json();
      break;
    case upr::ModelKind::qr:
      out["weights"] =
          upr::qr_portfolio(panel.returns, spec.qr_alpha, mu0, cfg).to_json();
      break;
    case upr::ModelKind::cqr1:
      out["weights"] =
          upr::cqr_portfolio(panel.returns, upr::cqr1_grid(), mu0, cfg).to_json();
      break;
    case upr::ModelKind::cqr2:
      out["weights"] =
          upr::cqr_portfolio(panel.returns, upr::cqr2_grid(), mu0, cfg).to_json();
      break;
    case upr::ModelKind::upr: {
      upr::FitResult fit = upr::fit_upr_portfolio(panel.returns, cfg);
      out["weights"] = fit.weights.to_json();
      out["spline"] = fit.model.to_json();
      out["iterations"] = fit.iterations;
      out["converged"] = fit.converged;
      out["objective_first"] = fit.objective_trace.front();
      out["objective_last"] = fit.objective_trace.back();
      write_text(fs::path(out_dir) / "upr_spline.json",
                 fit.model.to_json().dump(2) + "\n");
      upr::write_quantile_curve(fit.model,
                                (fs::path(out_dir) / "upr_curve.csv").string());
      std::cout << "objective: " << fit.objective_trace.front() << " -> "
                << fit.objective_trace.back() << " in " << fit.iterations
                << " iterations (converged=" << (fit.converged ? "yes" : "no")
                << ")\n";
      break;
    }
  }
  out["tickers"] = panel.tickers;
  const fs::path weights_path = fs::path(out_dir) / (spec.name() + "_fit.json");
  write_text(weights_path, out.dump(2) + "\n");
  std::cout << "wrote " << weights_path.string() << "\n";
  return 0;
}

int cmd_backtest(const std::string& returns_csv, const std::string& models_csv,
                 const CommonFitFlags& flags, Eigen::Index window,
                 Eigen::Index horizon, bool sr_tests, int threads,
                 const std::string& out_dir) {
  upr::ReturnPanel panel = upr::load_returns(returns_csv);
  std::vector<upr::ModelSpec> models = parse_models(models_csv);
  upr::BacktestConfig cfg;
  cfg.window = window;
  cfg.horizon = horizon;
  cfg.fit = flags.to_config();
  cfg.sr_tests = sr_tests;
  cfg.threads = threads;

  std::vector<upr::BacktestReport> reports =
      upr::run_backtest(panel, models, cfg);

  fs::create_directories(out_dir);
  std::ostringstream returns_csv_body, metrics_csv_body, curves_csv_body;
  returns_csv_body << "model,window,date,return\n";
  metrics_csv_body << "model,metric,value\n";
  curves_csv_body << "model,window,alpha,fitted,empirical\n";

  std::cout << "model        cw    max_loss       mdd    cvar01        sr\n";
  for (const auto& rep : reports) {
    write_text(fs::path(out_dir) / ("report_" + rep.model_name + ".json"),
               rep.to_json().dump(2) + "\n");
    for (size_t wi = 0; wi < rep.per_window.size(); ++wi) {
      const auto& wr = rep.per_window[wi];
      for (Eigen::Index k = 0; k < wr.oos_returns.size(); ++k) {
        returns_csv_body << rep.model_name << ',' << wi << ','
                         << panel.dates[static_cast<size_t>(wr.window.eval_start + k)]
                         << ',' << fmt(wr.oos_returns[k]) << '\n';
      }
      if (wr.model) {
        std::vector<double> grid;
        for (int g = 1; g <= 99; ++g) grid.push_back(g / 100.0);
        auto disc = upr::quantile_discrepancy(*wr.model, wr.oos_returns, grid);
        for (const auto& row : disc.rows) {
          curves_csv_body << rep.model_name << ',' << wi << ',' << row.alpha
                          << ',' << fmt(row.fitted) << ','
                          << fmt(row.empirical) << '\n';
        }
      }
    }
    const auto& m = rep.metrics;
    for (auto [name, v] : std::initializer_list<std::pair<const char*, double>>{
             {"cw", m.cw},
             {"max_loss", m.max_loss},
             {"mdd", m.mdd},
             {"cvar01", m.cvar01},
             {"sr", m.sr}}) {
      metrics_csv_body << rep.model_name << ',' << name << ',' << fmt(v) << '\n';
    }
    std::printf("%-6s %8.4f %10.4f %9.4f %9.4f %9.4f\n", rep.model_name.c_str(),
                m.cw, m.max_loss, m.mdd, m.cvar01, m.sr);
    for (const auto& w : rep.warnings) {
      std::cerr << "warning [" << rep.model_name << "]: " << w << "\n";
    }
  }
  write_text(fs::path(out_dir) / "returns.csv", returns_csv_body.str());
  write_text(fs::path(out_dir) / "metrics.csv", metrics_csv_body.str());
  write_text(fs::path(out_dir) / "quantile_curves.csv", curves_csv_body.str());

  if (sr_tests) {
    std::ostringstream z_csv;
    z_csv << "model_i,model_j,z\n";
    std::cout << "\npairwise SR-test Z statistics:\n";
    for (const auto& rep : reports) {
      for (const auto& [other, z] : rep.sr_tests) {
        z_csv << rep.model_name << ',' << other << ',' << fmt(z) << '\n';
        std::printf("  %-6s vs %-6s  Z = %+.4f\n", rep.model_name.c_str(),
                    other.c_str(), z);
      }
    }
    write_text(fs::path(out_dir) / "sr_tests.csv", z_csv.str());
  }
  return 0;
}

int cmd_simulate(double tau_fit, double tau_oos, Eigen::Index n,
                 const std::string& models_csv, const CommonFitFlags& flags,
                 const std::string& out_dir) {
  if (!(tau_fit > 0.0 && tau_fit < 1.0 && tau_oos > 0.0 && tau_oos < 1.0)) {
    throw upr::validation_error("tau values must lie in (0,1)");
  }
  std::vector<upr::ModelSpec> models = parse_models(models_csv);
  upr::FitConfig cfg = flags.to_config();
  upr::TailExperimentResult res =
      upr::tail_experiment(tau_fit, tau_oos, n, models, cfg);

  fs::create_directories(out_dir);
  std::ostringstream table;
  table << "model,max_loss\n";
  nlohmann::json j;
  j["tau_fit"] = tau_fit;
  j["tau_oos"] = tau_oos;
  j["n"] = n;
  j["seed"] = cfg.seed;
  std::cout << "tail experiment: fit tau=" << tau_fit << ", eval tau="
            << tau_oos << ", n=" << n << "\n";
  for (const auto& row : res.rows) {
    table << row.model << ',' << fmt(row.max_loss) << '\n';
    std::printf("  %-6s max loss %8.4f\n", row.model.c_str(), row.max_loss);
    std::ostringstream curve;
    curve << "alpha,value\n";
    for (size_t i = 0; i < row.curve_levels.size(); ++i) {
      curve << row.curve_levels[i] << ',' << fmt(row.curve_values[i]) << '\n';
    }
    write_text(fs::path(out_dir) / ("quantile_curve_" + row.model + ".csv"),
               curve.str());
    j["max_loss"][row.model] = row.max_loss;
    j["weights"][row.model] = row.weights.to_json();
  }
  write_text(fs::path(out_dir) / "experiment.csv", table.str());
  write_text(fs::path(out_dir) / "experiment.json", j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uniform-pessimistic-risk portfolio toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a TOML-style file");

  std::string prices_csv, returns_csv, out_csv, out_dir = ".";
  std::string model = "upr", models_csv = "ew,mv,qr,cqr1,cqr2,upr";
  CommonFitFlags flags;
  Eigen::Index window = 240, horizon = 60, n_sim = 300;
  double tau_fit = 2.0 / 3.0, tau_oos = 2.0 / 3.0;
  bool sr_tests = false;
  int threads = 0;

  CLI::App* ingest = app.add_subcommand("ingest", "prices CSV -> log-return CSV");
  ingest->add_option("--prices", prices_csv, "input price CSV")->required();
  ingest->add_option("--out", out_csv, "output return CSV")->required();

  CLI::App* fit = app.add_subcommand("fit", "fit one portfolio model");
  fit->add_option("--returns", returns_csv, "input return CSV")->required();
  fit->add_option("--model", model, "ew|mv|qr|cqr1|cqr2|upr")->required();
  fit->add_option("--out-dir", out_dir, "output directory");
  flags.attach(fit);

  CLI::App* backtest = app.add_subcommand("backtest", "rolling-window evaluation");
  backtest->add_option("--returns", returns_csv, "input return CSV")->required();
  backtest->add_option("--models", models_csv, "comma-separated model list");
  backtest->add_option("--window", window, "estimation window rows");
  backtest->add_option("--horizon", horizon, "evaluation rows per window");
  backtest->add_flag("--sr-tests", sr_tests, "emit pairwise SR-test Z matrix");
  backtest->add_option("--threads", threads, "window parallelism (0 = auto)");
  backtest->add_option("--out-dir", out_dir, "output directory");
  flags.attach(backtest);

  CLI::App* simulate = app.add_subcommand("simulate", "copula tail experiment");
  simulate->add_option("--tau-fit", tau_fit, "Kendall tau of the fit panel");
  simulate->add_option("--tau-oos", tau_oos, "Kendall tau of the eval panel");
  simulate->add_option("--n", n_sim, "draws per panel");
  simulate->add_option("--models", models_csv, "comma-separated model list");
  simulate->add_option("--out-dir", out_dir, "output directory");
  flags.attach(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(prices_csv, out_csv);
    if (*fit) return cmd_fit(returns_csv, model, flags, out_dir);
    if (*backtest) {
      return cmd_backtest(returns_csv, models_csv, flags, window, horizon,
                          sr_tests, threads, out_dir);
    }
    if (*simulate) {
      return cmd_simulate(tau_fit, tau_oos, n_sim, models_csv, flags, out_dir);
    }
  } catch (const upr::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const upr::numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
