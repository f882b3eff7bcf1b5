#include "upr/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "upr/errors.hpp"

namespace upr {

namespace {

bool iso_date_ok(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  int mo = (s[5] - '0') * 10 + (s[6] - '0');
  int da = (s[8] - '0') * 10 + (s[9] - '0');
  return mo >= 1 && mo <= 12 && da >= 1 && da <= 31;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
      cell.pop_back();
    }
    size_t b = cell.find_first_not_of(' ');
    out.push_back(b == std::string::npos ? "" : cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_double(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, *out);
  return res.ec == std::errc() && res.ptr == e && std::isfinite(*out);
}

bool missing_cell(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
         s == "null";
}

struct RawCsv {
  std::vector<std::string> dates;
  std::vector<std::string> tickers;
  std::vector<std::vector<std::string>> cells;  // rows x tickers
};

RawCsv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open file: " + path);
  RawCsv raw;
  std::string line;
  if (!std::getline(in, line)) throw validation_error("empty file: " + path);
  auto header = split_csv_line(line);
  if (header.size() < 2) {
    throw validation_error("header must contain a date column and at least one asset: " + path);
  }
  raw.tickers.assign(header.begin() + 1, header.end());
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw validation_error(path + ":" + std::to_string(lineno) +
                             ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(cells.size()));
    }
    if (!iso_date_ok(cells[0])) {
      throw validation_error(path + ":" + std::to_string(lineno) +
                             ": unparseable date '" + cells[0] + "'");
    }
    if (!raw.dates.empty() && cells[0] <= raw.dates.back()) {
      throw validation_error(path + ":" + std::to_string(lineno) +
                             ": dates not strictly increasing at '" + cells[0] + "'");
    }
    raw.dates.push_back(cells[0]);
    raw.cells.emplace_back(cells.begin() + 1, cells.end());
  }
  return raw;
}

void write_panel_csv(const std::string& path,
                     const std::vector<std::string>& dates,
                     const std::vector<std::string>& tickers,
                     const Eigen::MatrixXd& values) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write file: " + path);
  out << "date";
  for (const auto& t : tickers) out << ',' << t;
  out << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << dates[static_cast<size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", values(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw validation_error("write failed: " + path);
}

}  // namespace

void PricePanel::validate() const {
  if (prices.rows() != static_cast<Eigen::Index>(dates.size()) ||
      prices.cols() != static_cast<Eigen::Index>(tickers.size())) {
    throw validation_error("price panel shape mismatch");
  }
  for (size_t i = 1; i < dates.size(); ++i) {
    if (dates[i] <= dates[i - 1]) {
      throw validation_error("dates not strictly increasing");
    }
  }
  if (!(prices.array() > 0.0).all()) {
    throw validation_error("non-positive price in panel");
  }
}

void ReturnPanel::validate() const {
  if (returns.rows() != static_cast<Eigen::Index>(dates.size()) ||
      returns.cols() != static_cast<Eigen::Index>(tickers.size())) {
    throw validation_error("return panel shape mismatch");
  }
  if (!returns.array().isFinite().all()) {
    throw validation_error("non-finite return in panel");
  }
}

PricePanel load_prices(const std::string& path,
                       std::vector<std::string>* dropped) {
  RawCsv raw = read_csv(path);
  const size_t n = raw.dates.size();
  const size_t p_in = raw.tickers.size();
  if (n < 2) throw validation_error("fewer than 2 price rows in " + path);

  std::vector<bool> keep(p_in, true);
  for (size_t j = 0; j < p_in; ++j) {
    for (size_t i = 0; i < n && keep[j]; ++i) {
      if (missing_cell(raw.cells[i][j])) keep[j] = false;
    }
  }
  size_t p = 0;
  for (size_t j = 0; j < p_in; ++j) {
    if (keep[j]) {
      ++p;
    } else if (dropped) {
      dropped->push_back(raw.tickers[j]);
    }
  }
  if (p == 0) throw validation_error("no assets remain after dropping incomplete columns");

  PricePanel panel;
  panel.dates = std::move(raw.dates);
  panel.prices.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  size_t col = 0;
  for (size_t j = 0; j < p_in; ++j) {
    if (!keep[j]) continue;
    panel.tickers.push_back(raw.tickers[j]);
    for (size_t i = 0; i < n; ++i) {
      double v;
      if (!parse_double(raw.cells[i][j], &v)) {
        throw validation_error(path + ": unparseable price for " +
                               raw.tickers[j] + " on " + panel.dates[i]);
      }
      if (v <= 0.0) {
        throw validation_error(path + ": non-positive price " +
                               raw.cells[i][j] + " for " + raw.tickers[j] +
                               " on " + panel.dates[i]);
      }
      panel.prices(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = v;
    }
    ++col;
  }
  panel.validate();
  return panel;
}

void write_prices(const PricePanel& panel, const std::string& path) {
  write_panel_csv(path, panel.dates, panel.tickers, panel.prices);
}

ReturnPanel to_log_returns(const PricePanel& panel) {
  panel.validate();
  const Eigen::Index n = panel.prices.rows();
  if (n < 2) throw validation_error("need at least 2 price rows");
  ReturnPanel out;
  out.tickers = panel.tickers;
  out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
  out.returns = (panel.prices.bottomRows(n - 1).array().log() -
                 panel.prices.topRows(n - 1).array().log())
                    .matrix();
  out.validate();
  return out;
}

ReturnPanel load_returns(const std::string& path) {
  RawCsv raw = read_csv(path);
  const size_t n = raw.dates.size();
  const size_t p = raw.tickers.size();
  if (n < 1) throw validation_error("no return rows in " + path);
  ReturnPanel panel;
  panel.dates = std::move(raw.dates);
  panel.tickers = std::move(raw.tickers);
  panel.returns.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < p; ++j) {
      double v;
      if (!parse_double(raw.cells[i][j], &v)) {
        throw validation_error(path + ": unparseable return for " +
                               panel.tickers[j] + " on " + panel.dates[i]);
      }
      panel.returns(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  panel.validate();
  return panel;
}

void write_returns(const ReturnPanel& panel, const std::string& path) {
  write_panel_csv(path, panel.dates, panel.tickers, panel.returns);
}

std::vector<RollingWindow> rolling_windows(Eigen::Index n_rows,
                                           Eigen::Index window,
                                           Eigen::Index horizon,
                                           bool keep_partial) {
  if (window < 1 || horizon < 1) {
    throw validation_error("window and horizon must be positive");
  }
  if (n_rows <= window) {
    throw validation_error("panel has no evaluation rows beyond the first window");
  }
  std::vector<RollingWindow> out;
  for (Eigen::Index start = 0;; start += horizon) {
    RollingWindow w;
    w.fit_start = start;
    w.fit_end = start + window - 1;
    w.eval_start = w.fit_end + 1;
    if (w.eval_start >= n_rows) break;
    w.eval_end = std::min(w.eval_start + horizon - 1, n_rows - 1);
    if (!keep_partial && w.eval_rows() < horizon) break;
    out.push_back(w);
    if (w.eval_end == n_rows - 1) break;
  }
  return out;
}

std::string synthetic_date(long offset) {
  // days -> civil date, days counted from 1970-01-01 (Gregorian arithmetic)
  long z = offset + 11323;  // 2001-01-01 is day 11323 of the Unix epoch
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u",
                static_cast<int>(y + (m <= 2)), m, d);
  return buf;
}

}  // namespace upr
