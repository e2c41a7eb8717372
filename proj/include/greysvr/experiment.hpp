#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "greysvr/gca.hpp"
#include "greysvr/market_data.hpp"
#include "greysvr/metrics.hpp"
#include "greysvr/model_selection.hpp"
#include "greysvr/preprocess.hpp"
#include "greysvr/svr.hpp"

namespace greysvr {

/// Per-stock data preparation shared by the pipeline, the screening stage
/// and the backtest.
struct PrepOptions {
  SplitPlan plan;
  double mad_k = 5.0;  ///< 0 disables clamping
  double tau = 0.5;
  InitialOperator init = InitialOperator::None;
};

/// One stock's regression problem after splitting, clamping and scaling.
/// Clamp and scaling parameters come from the training block only; GCA
/// weights come from the weight block only.
struct PreparedStock {
  std::vector<std::string> factor_names;  ///< columns kept
  std::vector<std::string> dropped;       ///< constant on the training block
  ChronoSplit split;
  ColumnTransform features;
  NormParams target_norm;

  Eigen::MatrixXd x_weight, x_train, x_test;
  Eigen::VectorXd y_weight, y_train, y_test;  ///< normalized targets
  std::vector<Date> test_dates;
  std::vector<double> test_close;  ///< raw prices

  GreyWeights weights;
  /// Some scaled test feature lies outside [-1.5, 1.5].
  bool test_out_of_range = false;
};

/// Throws DataError when the series is too short to split or when every
/// factor column is constant on the training block.
PreparedStock prepare_stock(const FactorMatrix& m, const PrepOptions& options);

enum class ModelKind { Classical, Weighted };

std::string_view model_name(ModelKind kind);  ///< "csvr" / "fwsvr"

struct FitOptions {
  Grid grid = Grid::defaults();
  SearchOptions search;
  int folds = 10;
  std::uint64_t fold_seed = 0;
};

struct FittedModel {
  ModelKind kind = ModelKind::Classical;
  GridSearchResult search;
  SvrModel model;  ///< carries feature names, clamp and scaling parameters
  std::vector<double> test_prediction;  ///< price units
  EvalReport eval;
};

/// Grid search on the training block, refit on all of it with the chosen
/// triple, then score the test block in price units.
FittedModel fit_model(const PreparedStock& stock, ModelKind kind, const FitOptions& options);

/// Predicts raw feature rows (price units) with a model that carries its own
/// clamp and scaling parameters.
std::vector<double> predict_prices(const SvrModel& model, const Eigen::MatrixXd& raw_rows);

}  // namespace greysvr
