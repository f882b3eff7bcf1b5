#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace upr {

// Adjusted closing prices: rows are dates (strictly increasing ISO-8601),
// columns are assets. All prices positive, no missing cells after cleaning.
struct PricePanel {
  std::vector<std::string> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd prices;  // n x p

  void validate() const;
};

// Daily log returns; row t is ln(prices[t+1]/prices[t]), dated at t+1.
struct ReturnPanel {
  std::vector<std::string> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd returns;  // (n-1) x p

  Eigen::Index rows() const { return returns.rows(); }
  Eigen::Index assets() const { return returns.cols(); }
  void validate() const;
};

// One rolling estimation/evaluation split. Row indices are inclusive.
struct RollingWindow {
  Eigen::Index fit_start = 0;
  Eigen::Index fit_end = 0;
  Eigen::Index eval_start = 0;
  Eigen::Index eval_end = 0;

  Eigen::Index fit_rows() const { return fit_end - fit_start + 1; }
  Eigen::Index eval_rows() const { return eval_end - eval_start + 1; }
};

// Loads a price CSV: header "date,TICKER,...", first column ISO-8601 dates,
// remaining columns prices. Assets with any missing cell are dropped and
// reported through `dropped`; non-positive or non-numeric prices are errors.
PricePanel load_prices(const std::string& path,
                       std::vector<std::string>* dropped = nullptr);

void write_prices(const PricePanel& panel, const std::string& path);

ReturnPanel to_log_returns(const PricePanel& panel);

ReturnPanel load_returns(const std::string& path);
void write_returns(const ReturnPanel& panel, const std::string& path);

// Windows advance by `horizon`; the first fit range is [0, window-1]. A
// final evaluation range shorter than `horizon` is kept when
// `keep_partial` is set.
std::vector<RollingWindow> rolling_windows(Eigen::Index n_rows,
                                           Eigen::Index window = 240,
                                           Eigen::Index horizon = 60,
                                           bool keep_partial = true);

// "YYYY-MM-DD" for the day `offset` days after 2001-01-01; used by the
// simulator so generated panels share the ingest schema.
std::string synthetic_date(long offset);

}  // namespace upr
