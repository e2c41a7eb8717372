#include "greysvr/backtest.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "csv.hpp"
#include "greysvr/error.hpp"

namespace greysvr {

BacktestResult simulate_backtest(const std::vector<TradingPath>& paths, const ClosePredictor& predictor,
                                 const std::vector<Date>& calendar) {
  BacktestResult result;
  std::set<Date> dates(calendar.begin(), calendar.end());
  std::vector<std::map<Date, std::size_t>> day_index(paths.size());
  for (std::size_t s = 0; s < paths.size(); ++s) {
    const auto& p = paths[s];
    if (p.prev_close.size() != p.dates.size() || p.close.size() != p.dates.size()) {
      throw std::invalid_argument("trading path '" + p.id + "' has ragged columns");
    }
    result.admitted.push_back(p.id);
    for (std::size_t k = 0; k < p.dates.size(); ++k) {
      dates.insert(p.dates[k]);
      day_index[s][p.dates[k]] = k;
    }
  }

  const double slot = paths.empty() ? 0.0 : 1.0 / static_cast<double>(paths.size());
  std::vector<bool> holding(paths.size(), false);
  double equity = 1.0;
  for (const Date& d : dates) {
    BacktestDay day;
    day.date = d;
    for (std::size_t s = 0; s < paths.size(); ++s) {
      const auto it = day_index[s].find(d);
      if (it == day_index[s].end()) continue;
      const std::size_t k = it->second;
      const TradingPath& p = paths[s];
      const bool want = predictor(s, k) > p.prev_close[k];
      if (want != holding[s]) result.trades.push_back({d, p.id, want});
      holding[s] = want;
      if (want) {
        day.held.push_back(p.id);
        day.portfolio_return += slot * (p.close[k] / p.prev_close[k] - 1.0);
      }
    }
    equity *= 1.0 + day.portfolio_return;
    day.equity = equity;
    result.days.push_back(std::move(day));
  }
  return result;
}

bool admit(const EvalReport& eval, const BacktestOptions& options) {
  if (!(eval.ds > options.ds_min)) return false;
  return !options.require_scc || eval.scc.has_value();
}

namespace {

/// Refit on `rows` with fixed hyperparameters and weights; the scaling is
/// refitted on the same rows.
SvrModel refit(const FactorMatrix& m, const std::vector<std::size_t>& rows, const ModelResult& base,
               const GreyWeights& weights, const PipelineConfig& config) {
  const Eigen::MatrixXd x_raw = take_rows(m.values, rows);
  const ColumnTransform t = ColumnTransform::fit(x_raw, config.mad_k);
  const Eigen::VectorXd y_raw = take_rows(m.target, rows);
  const NormParams yn = range_normalize(std::vector<double>(y_raw.data(), y_raw.data() + y_raw.size())).params;
  Eigen::VectorXd y(y_raw.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = apply_normalize(y_raw(i), yn);
  const std::optional<GreyWeights> w = base.kind == ModelKind::Weighted ? std::optional(weights) : std::nullopt;
  SvrModel model = train_svr(t.apply(x_raw), y, base.best, w, config.solver);
  model.feature_names = base.model.feature_names;
  model.feature_norm = t.norm;
  model.feature_clamp = t.mad;
  model.target_norm = yn;
  return model;
}

}  // namespace

BacktestResult backtest(const PipelineConfig& config, RunReport* report_out) {
  if (config.lag != LagMode::All) {
    throw ConfigError("backtest refuses same-day factors; rerun with --lag-all (lag = all)");
  }
  PipelineConfig cfg = config;
  cfg.mode = config.backtest.model == ModelKind::Weighted ? RunMode::Weighted : RunMode::Classical;
  RunReport report = run_experiment(cfg);
  const LoadedUniverse universe = load_universe(cfg);

  std::vector<TradingPath> paths;
  std::vector<std::vector<double>> predictions;
  std::vector<Date> calendar;
  std::vector<std::string> rejected;
  for (const auto& r : report.stocks) {
    const auto& model = cfg.backtest.model == ModelKind::Weighted ? r.fwsvr : r.csvr;
    if (!model) {
      rejected.push_back(r.id + ": " + (r.skip_reason.empty() ? "no model" : r.skip_reason));
      continue;
    }
    calendar.insert(calendar.end(), r.test_dates.begin(), r.test_dates.end());
    if (!admit(model->eval, cfg.backtest)) {
      rejected.push_back(r.id + ": evaluation below admission thresholds");
      continue;
    }
    const auto it = std::find_if(universe.stocks.begin(), universe.stocks.end(),
                                 [&](const StockMatrix& s) { return s.id == r.id; });
    if (it == universe.stocks.end()) throw DataError(r.id + ": stock vanished between runs");
    const FactorMatrix m = it->matrix.select(r.factors);

    const std::size_t n = m.rows();
    const std::size_t test_start = n - r.test_rows;
    const std::size_t window = r.train_rows;
    TradingPath path;
    path.id = r.id;
    std::vector<double> pred;
    SvrModel current = model->model;
    for (std::size_t k = 0; k < r.test_rows; ++k) {
      const std::size_t row = test_start + k;
      if (k > 0 && k % static_cast<std::size_t>(cfg.backtest.retrain) == 0) {
        std::vector<std::size_t> rows;
        for (std::size_t i = row - window; i < row; ++i) rows.push_back(i);
        try {
          current = refit(m, rows, *model, r.weights, cfg);
        } catch (const DataError&) {
          // Degenerate window (a constant column): keep trading the last model.
        }
      }
      path.dates.push_back(m.dates[row]);
      path.prev_close.push_back(m.target(static_cast<Eigen::Index>(row - 1)));
      path.close.push_back(m.target(static_cast<Eigen::Index>(row)));
      pred.push_back(predict_prices(current, m.values.row(static_cast<Eigen::Index>(row))).front());
    }
    paths.push_back(std::move(path));
    predictions.push_back(std::move(pred));
  }

  BacktestResult result = simulate_backtest(
      paths, [&](std::size_t s, std::size_t k) { return predictions[s][k]; }, calendar);
  result.rejected = std::move(rejected);
  if (report_out != nullptr) *report_out = std::move(report);
  return result;
}

namespace {

std::string fmt(double v) { return detail::format_real(v); }

}  // namespace

std::string trades_tsv(const BacktestResult& result) {
  std::string out = "date\tid\taction\n";
  for (const auto& t : result.trades) out += format_date(t.date) + "\t" + t.id + "\t" + (t.buy ? "buy" : "sell") + "\n";
  return out;
}

std::string equity_tsv(const BacktestResult& result) {
  std::string out = "date\tpositions\tdaily_return\tequity\theld\n";
  for (const auto& d : result.days) {
    std::string held;
    for (std::size_t i = 0; i < d.held.size(); ++i) held += (i ? "," : "") + d.held[i];
    out += format_date(d.date) + "\t" + std::to_string(d.held.size()) + "\t" + fmt(d.portfolio_return) + "\t" +
           fmt(d.equity) + "\t" + held + "\n";
  }
  return out;
}

}  // namespace greysvr
