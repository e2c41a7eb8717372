#include "greysvr/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "greysvr/error.hpp"
#include "greysvr/metrics.hpp"
#include "greysvr/parallel.hpp"
#include "greysvr/random.hpp"

namespace greysvr {

void SplitPlan::validate() const {
  if (!(weight_fraction > 0.0 && weight_fraction < 1.0)) {
    throw std::invalid_argument("weight_fraction must lie in (0, 1)");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  if (k < 2) throw std::invalid_argument("k must be at least 2");
}

ChronoSplit chronological_split(std::size_t n, const SplitPlan& plan) {
  plan.validate();
  // The small offset keeps exact ratios (n/20, 4/5) from rounding down.
  const auto n_weight = static_cast<std::size_t>(std::floor(static_cast<double>(n) * plan.weight_fraction + 1e-9));
  const std::size_t rest = n - std::min(n, n_weight);
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(rest) * plan.train_fraction + 1e-9));
  const std::size_t n_test = rest - std::min(rest, n_train);
  if (n_weight < 2 || n_train < 2 || n_test < 2) {
    throw DataError("chronological_split: " + std::to_string(n) +
                    " samples are too few (each segment needs at least 2)");
  }
  ChronoSplit s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_weight) {
      s.weight.push_back(i);
    } else if (i < n_weight + n_train) {
      s.train.push_back(i);
    } else {
      s.test.push_back(i);
    }
  }
  return s;
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be at least 2");
  const auto kk = static_cast<std::size_t>(k);
  if (n < kk) throw DataError("kfold_split: fewer samples than folds");
  SplitMix64 rng(seed);
  const auto order = shuffled_indices(n, rng);
  std::vector<std::vector<std::size_t>> folds(kk);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < kk; ++f) {
    const std::size_t size = n / kk + (f < n % kk ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(folds[f].begin(), folds[f].end());
    pos += size;
  }
  return folds;
}

Grid Grid::defaults() {
  return {log2_range(-2, 8), log2_range(-10, 0), log2_range(-10, -2)};
}

std::vector<double> Grid::log2_range(double from, double to, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("log2_range: step must be positive");
  std::vector<double> out;
  for (double e = from; e <= to + 1e-9; e += step) out.push_back(std::exp2(e));
  return out;
}

void Grid::validate() const {
  for (const auto* v : {&C_values, &gamma_values, &epsilon_values}) {
    if (v->empty()) throw std::invalid_argument("grid: empty value list");
  }
  for (const auto& h : triples()) h.validate();
}

std::vector<Hyperparams> Grid::triples() const {
  auto canon = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  std::vector<Hyperparams> out;
  for (double c : canon(C_values)) {
    for (double g : canon(gamma_values)) {
      for (double e : canon(epsilon_values)) out.push_back({c, e, g});
    }
  }
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
  return out;
}

double cross_validation_error(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hyper,
                              const std::vector<std::vector<std::size_t>>& folds,
                              const std::optional<GreyWeights>& weights, const SolverOptions& solver) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<int> fold_of(n, -1);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::size_t i : folds[f]) fold_of[i] = static_cast<int>(f);
  }
  double total = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != static_cast<int>(f)) train.push_back(i);
    }
    const auto model = train_svr(take_rows(x, train), take_rows(y, train), hyper, weights, solver);
    const Eigen::VectorXd pred = predict(model, take_rows(x, folds[f]));
    const Eigen::VectorXd obs = take_rows(y, folds[f]);
    total += mse(std::span<const double>(obs.data(), static_cast<std::size_t>(obs.size())),
                 std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())));
  }
  return total / static_cast<double>(folds.size());
}

GridSearchResult grid_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Grid& grid,
                             const SplitPlan& plan, const std::optional<GreyWeights>& weights,
                             const SearchOptions& options) {
  grid.validate();
  plan.validate();
  const auto folds = kfold_split(static_cast<std::size_t>(x.rows()), plan.k, plan.seed);

  GridSearchResult result;
  for (const auto& h : grid.triples()) result.cells.push_back({h, std::nullopt, {}});

  parallel_for(result.cells.size(), options.workers, [&](std::size_t i) {
    auto& cell = result.cells[i];
    try {
      cell.cv_error = cross_validation_error(x, y, cell.hyper, folds, weights, options.solver);
    } catch (const ConvergenceError& e) {
      cell.failure = e.what();
      cell.convergence_failure = true;
    } catch (const std::exception& e) {
      cell.failure = e.what();
    }
  });

  const GridCell* best = nullptr;
  for (const auto& cell : result.cells) {
    if (!cell.cv_error || !std::isfinite(*cell.cv_error)) continue;
    if (best == nullptr) {
      best = &cell;
      continue;
    }
    const auto key = [](const GridCell& c) {
      return std::make_tuple(*c.cv_error, c.hyper.C, c.hyper.gamma, -c.hyper.epsilon);
    };
    if (key(cell) < key(*best)) best = &cell;
  }
  if (best == nullptr) {
    const bool all_convergence = std::all_of(result.cells.begin(), result.cells.end(),
                                             [](const GridCell& c) { return c.convergence_failure; });
    if (all_convergence && !result.cells.empty()) {
      throw ConvergenceError("grid_search: no grid cell converged (" + result.cells.front().failure + ")",
                             std::numeric_limits<double>::quiet_NaN());
    }
    throw DataError("grid_search: every grid cell failed" +
                    (result.cells.empty() ? std::string() : " (" + result.cells.front().failure + ")"));
  }
  result.best = best->hyper;
  result.cv_error = *best->cv_error;
  return result;
}

}  // namespace greysvr
