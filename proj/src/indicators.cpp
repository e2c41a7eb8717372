#include "greysvr/indicators.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "csv.hpp"
#include "greysvr/error.hpp"

namespace greysvr {

namespace {

void require_window(std::size_t have, std::size_t need, const char* what) {
  if (have < need) {
    throw DataError(std::string(what) + ": need at least " + std::to_string(need) + " rows, have " +
                    std::to_string(have));
  }
}

IndicatorSeries make_series(const char* name, int window) {
  IndicatorSeries s;
  s.name = name;
  s.window = window;
  return s;
}

}  // namespace

FactorReturnsPanel parse_factor_panel(const std::string& csv_text) {
  const auto all = detail::lines(csv_text);
  std::size_t i = 0;
  while (i < all.size() && all[i].empty()) ++i;
  if (i == all.size()) throw DataError("empty factor panel");
  const auto header = detail::split(all[i]);
  const std::vector<std::string_view> expected{"date", "r_i", "r_m", "r_f", "hml", "smb"};
  if (header != expected) throw DataError("factor panel: expected header 'date,r_i,r_m,r_f,hml,smb'");

  FactorReturnsPanel p;
  std::size_t row = 0;
  for (++i; i < all.size(); ++i) {
    if (all[i].empty()) continue;
    ++row;
    const auto f = detail::split(all[i]);
    if (f.size() != expected.size()) throw DataError("row " + std::to_string(row) + ": expected 6 fields");
    try {
      p.dates.push_back(parse_date(f[0]));
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(row) + ": " + e.what());
    }
    std::vector<double>* cols[] = {&p.r_i, &p.r_m, &p.r_f, &p.hml, &p.smb};
    for (std::size_t c = 0; c < 5; ++c) {
      double v = 0.0;
      if (!detail::parse_double(f[c + 1], v) || !std::isfinite(v)) {
        throw DataError("row " + std::to_string(row) + ": cannot parse '" + std::string(f[c + 1]) + "'");
      }
      cols[c]->push_back(v);
    }
    if (p.dates.size() > 1 && !(p.dates[p.dates.size() - 2] < p.dates.back())) {
      throw DataError("row " + std::to_string(row) + ": factor panel dates must be strictly increasing");
    }
  }
  return p;
}

FactorReturnsPanel load_factor_panel(const std::filesystem::path& path) {
  try {
    return parse_factor_panel(detail::read_file(path.string()));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw std::invalid_argument("ols: row count mismatch");
  if (x.rows() <= x.cols()) throw RankDeficiencyError("ols: need more rows than columns");

  const Eigen::MatrixXd gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || lmin <= 1e-10 * lmax) {
    throw RankDeficiencyError("ols: design matrix is rank deficient");
  }

  OlsFit fit;
  fit.coeffs = x.colPivHouseholderQr().solve(y);
  fit.residuals = y - x * fit.coeffs;
  return fit;
}

IndicatorSeries ivr(const FactorReturnsPanel& panel, int window, IvrAggregate agg) {
  if (window < 4) throw std::invalid_argument("ivr: window must exceed the 3 regressors");
  const std::size_t n = panel.size();
  for (const auto* v : {&panel.r_i, &panel.r_m, &panel.r_f, &panel.hml, &panel.smb}) {
    if (v->size() != n) throw DataError("ivr: panel columns have unequal lengths");
  }
  const auto w = static_cast<std::size_t>(window);
  require_window(n, w + 1, "ivr");

  IndicatorSeries out = make_series("X32", window);
  Eigen::MatrixXd x(window, 3);
  Eigen::VectorXd y(window);
  for (std::size_t t = w - 1; t < n; ++t) {
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t i = t + 1 - w + j;
      const auto r = static_cast<Eigen::Index>(j);
      y(r) = panel.r_i[i] - panel.r_f[i];
      x(r, 0) = panel.r_m[i] - panel.r_f[i];
      x(r, 1) = panel.hml[i];
      x(r, 2) = panel.smb[i];
    }
    const auto e = ols(x, y).residuals;
    double value = 0.0;
    if (agg == IvrAggregate::MeanAbs) {
      value = e.cwiseAbs().mean();
    } else {
      const double mu = e.mean();
      value = std::sqrt((e.array() - mu).square().sum() / static_cast<double>(window - 1));
    }
    out.dates.push_back(panel.dates[t]);
    out.values.push_back(value);
  }
  return out;
}

IndicatorSeries ar_index(const OhlcvSeries& ohlcv, int window) {
  if (window < 1) throw std::invalid_argument("ar_index: window must be positive");
  const auto w = static_cast<std::size_t>(window);
  require_window(ohlcv.size(), w, "ar_index");

  IndicatorSeries out = make_series("X33", window);
  for (std::size_t t = w - 1; t < ohlcv.size(); ++t) {
    double up = 0.0;
    double down = 0.0;
    for (std::size_t i = t + 1 - w; i <= t; ++i) {
      const auto& b = ohlcv.rows[i];
      up += b.high - b.open;
      down += b.open - b.low;
    }
    if (down > 0.0) {
      out.dates.push_back(ohlcv.rows[t].date);
      out.values.push_back(up / down);
    }
  }
  return out;
}

IndicatorSeries adtm(const OhlcvSeries& ohlcv, int window) {
  if (window < 1) throw std::invalid_argument("adtm: window must be positive");
  const auto w = static_cast<std::size_t>(window);
  require_window(ohlcv.size(), w + 1, "adtm");

  const std::size_t n = ohlcv.size();
  std::vector<double> dtm(n, 0.0);
  std::vector<double> dbm(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const auto& b = ohlcv.rows[i];
    const double prev_open = ohlcv.rows[i - 1].open;
    if (b.open > prev_open) dtm[i] = std::max(b.high - b.open, b.open - prev_open);
    if (b.open < prev_open) dbm[i] = std::max(b.open - b.low, b.open - prev_open);
  }

  IndicatorSeries out = make_series("X34", window);
  for (std::size_t t = w; t < n; ++t) {
    double stm = 0.0;
    double sbm = 0.0;
    for (std::size_t i = t + 1 - w; i <= t; ++i) {
      stm += dtm[i];
      sbm += dbm[i];
    }
    double value = 0.0;
    if (stm > sbm) {
      value = (stm - sbm) / stm;
    } else if (stm < sbm) {
      value = (stm - sbm) / sbm;
    }
    out.dates.push_back(ohlcv.rows[t].date);
    out.values.push_back(value);
  }
  return out;
}

IndicatorSeries obv(const OhlcvSeries& ohlcv, ObvPrice price) {
  if (ohlcv.empty()) throw DataError("obv: empty series");
  IndicatorSeries out = make_series("X35", 1);
  const auto px = [&](std::size_t i) {
    return price == ObvPrice::Open ? ohlcv.rows[i].open : ohlcv.rows[i].close;
  };
  double acc = ohlcv.rows[0].volume;
  out.dates.push_back(ohlcv.rows[0].date);
  out.values.push_back(acc);
  for (std::size_t i = 1; i < ohlcv.size(); ++i) {
    const double sgn = px(i) >= px(i - 1) ? 1.0 : -1.0;
    acc += sgn * ohlcv.rows[i].volume;
    out.dates.push_back(ohlcv.rows[i].date);
    out.values.push_back(acc);
  }
  return out;
}

IndicatorSeries turnover_rate(const OhlcvSeries& ohlcv, int window) {
  if (window < 1) throw std::invalid_argument("turnover_rate: window must be positive");
  if (!ohlcv.has_float_shares()) {
    throw DataError(ohlcv.instrument_id + ": turnover rate needs float_shares");
  }
  const auto w = static_cast<std::size_t>(window);
  require_window(ohlcv.size(), w, "turnover_rate");

  std::vector<double> daily(ohlcv.size());
  for (std::size_t i = 0; i < ohlcv.size(); ++i) {
    const double fs = *ohlcv.rows[i].float_shares;
    if (!(fs > 0.0)) throw DataError(ohlcv.instrument_id + ": non-positive float_shares");
    daily[i] = ohlcv.rows[i].volume / fs;
  }
  IndicatorSeries out = make_series("X31", window);
  for (std::size_t t = w - 1; t < ohlcv.size(); ++t) {
    const auto first = daily.begin() + static_cast<std::ptrdiff_t>(t + 1 - w);
    const double sum = std::accumulate(first, first + static_cast<std::ptrdiff_t>(w), 0.0);
    out.dates.push_back(ohlcv.rows[t].date);
    out.values.push_back(sum / static_cast<double>(w));
  }
  return out;
}

}  // namespace greysvr
