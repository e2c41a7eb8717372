#include "greysvr/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "greysvr/error.hpp"

namespace greysvr {

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd normalized(const Eigen::VectorXd& y, const NormParams& p) {
  Eigen::VectorXd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = apply_normalize(y(i), p);
  return out;
}

bool constant_after_clamp(const Eigen::VectorXd& col, double mad_k) {
  std::vector<double> v = to_vector(col);
  if (mad_k > 0.0) v = mad_clamp(v, mad_k).values;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo == *hi;
}

}  // namespace

PreparedStock prepare_stock(const FactorMatrix& m, const PrepOptions& options) {
  if (m.cols() == 0) throw DataError("no factor columns");
  PreparedStock p;
  p.split = chronological_split(m.rows(), options.plan);

  const Eigen::MatrixXd train_all = take_rows(m.values, p.split.train);
  std::vector<std::string> kept;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (constant_after_clamp(train_all.col(static_cast<Eigen::Index>(c)), options.mad_k)) {
      p.dropped.push_back(m.factor_names[c]);
    } else {
      kept.push_back(m.factor_names[c]);
    }
  }
  if (kept.empty()) throw DataError("every factor column is constant on the training block");
  p.factor_names = kept;
  const FactorMatrix used = p.dropped.empty() ? m : m.select(kept);

  const Eigen::MatrixXd x_train_raw = take_rows(used.values, p.split.train);
  p.features = ColumnTransform::fit(x_train_raw, options.mad_k);
  p.x_train = p.features.apply(x_train_raw);
  p.x_weight = p.features.apply(take_rows(used.values, p.split.weight));
  p.x_test = p.features.apply(take_rows(used.values, p.split.test));

  const Eigen::VectorXd y_train_raw = take_rows(used.target, p.split.train);
  try {
    p.target_norm = range_normalize(to_vector(y_train_raw)).params;
  } catch (const DataError&) {
    throw DataError("close price is constant on the training block");
  }
  p.y_train = normalized(y_train_raw, p.target_norm);
  p.y_weight = normalized(take_rows(used.target, p.split.weight), p.target_norm);
  p.y_test = normalized(take_rows(used.target, p.split.test), p.target_norm);
  for (std::size_t i : p.split.test) {
    p.test_dates.push_back(used.dates[i]);
    p.test_close.push_back(used.target(static_cast<Eigen::Index>(i)));
  }
  p.test_out_of_range = (p.x_test.array().abs() > 1.5).any();

  GreySeriesSet set;
  set.tau = options.tau;
  set.reference = apply_initial_operator(to_vector(p.y_weight), options.init);
  for (Eigen::Index c = 0; c < p.x_weight.cols(); ++c) {
    set.factors.push_back(apply_initial_operator(to_vector(p.x_weight.col(c)), options.init));
  }
  p.weights = normalize_weights(grey_relational_degrees(set));
  return p;
}

std::string_view model_name(ModelKind kind) { return kind == ModelKind::Classical ? "csvr" : "fwsvr"; }

FittedModel fit_model(const PreparedStock& stock, ModelKind kind, const FitOptions& options) {
  FittedModel f;
  f.kind = kind;
  const std::optional<GreyWeights> weights =
      kind == ModelKind::Weighted ? std::optional<GreyWeights>(stock.weights) : std::nullopt;

  SplitPlan plan;
  plan.seed = options.fold_seed;
  plan.k = std::min<int>(options.folds, static_cast<int>(stock.x_train.rows()));
  f.search = grid_search(stock.x_train, stock.y_train, options.grid, plan, weights, options.search);

  f.model = train_svr(stock.x_train, stock.y_train, f.search.best, weights, options.search.solver);
  f.model.feature_names = stock.factor_names;
  f.model.feature_norm = stock.features.norm;
  f.model.feature_clamp = stock.features.mad;
  f.model.target_norm = stock.target_norm;

  const Eigen::VectorXd pred = predict(f.model, stock.x_test);
  f.test_prediction = denormalize(to_vector(pred), stock.target_norm);
  f.eval = evaluate(stock.test_close, f.test_prediction);
  return f;
}

std::vector<double> predict_prices(const SvrModel& model, const Eigen::MatrixXd& raw_rows) {
  if (!model.target_norm) throw std::invalid_argument("model has no target scaling");
  const ColumnTransform t{model.feature_clamp, model.feature_norm};
  const Eigen::VectorXd pred = predict(model, t.apply(raw_rows));
  return denormalize(to_vector(pred), *model.target_norm);
}

}  // namespace greysvr
