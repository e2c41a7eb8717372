#pragma once

#include <functional>
#include <string>
#include <vector>

#include "greysvr/pipeline.hpp"

namespace greysvr {

/// One admitted stock's trading period: for each day, the previous close and
/// the realized close.
struct TradingPath {
  std::string id;
  std::vector<Date> dates;
  std::vector<double> prev_close;
  std::vector<double> close;
};

/// Predicted close for (stock index, day index of that stock's path).
using ClosePredictor = std::function<double(std::size_t stock, std::size_t day)>;

struct Trade {
  Date date;
  std::string id;
  bool buy = false;  ///< false: sell
};

struct BacktestDay {
  Date date;
  std::vector<std::string> held;  ///< positions carried through this day
  double portfolio_return = 0.0;
  double equity = 1.0;
};

struct BacktestResult {
  std::vector<std::string> admitted;
  std::vector<std::string> rejected;  ///< "id: reason"
  std::vector<Trade> trades;
  std::vector<BacktestDay> days;
};

/// Daily roll-forward over `calendar` plus every path date. Before each day a
/// stock is held when its predicted close beats the previous close and sold
/// otherwise. Capital is split equally over the forecast set; slots of
/// stocks not held stay in cash. No costs.
BacktestResult simulate_backtest(const std::vector<TradingPath>& paths, const ClosePredictor& predictor,
                                 const std::vector<Date>& calendar = {});

/// Stage-3 admission: DS above the threshold and, if required, SCC defined.
bool admit(const EvalReport& eval, const BacktestOptions& options);

/// Runs the experiment, admits stocks on their test-block evaluation and
/// trades their test blocks, refitting the chosen model every
/// `backtest.retrain` days on the trailing training window. Throws
/// ConfigError unless every factor is lagged.
BacktestResult backtest(const PipelineConfig& config, RunReport* report_out = nullptr);

std::string trades_tsv(const BacktestResult& result);
std::string equity_tsv(const BacktestResult& result);

}  // namespace greysvr
