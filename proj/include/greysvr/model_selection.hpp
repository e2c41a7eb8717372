#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "greysvr/gca.hpp"
#include "greysvr/svr.hpp"

namespace greysvr {

/// Data-splitting ratios: the first `weight_fraction` of samples estimate GCA
/// weights, the rest is split `train_fraction` : (1 - train_fraction) with the
/// test block last. Hyperparameters are chosen by `k`-fold CV on the training
/// block.
struct SplitPlan {
  double weight_fraction = 1.0 / 20.0;
  double train_fraction = 0.8;
  int k = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ChronoSplit {
  std::vector<std::size_t> weight;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Contiguous, time-ordered segments. Throws DataError unless each segment
/// gets at least 2 samples.
ChronoSplit chronological_split(std::size_t n, const SplitPlan& plan);

/// k disjoint folds covering 0..n-1 with sizes differing by at most one; the
/// first n % k folds hold the extra sample. Indices inside a fold are sorted.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, int k, std::uint64_t seed);

/// Hyperparameter grid. Values are de-duplicated and sorted when enumerated.
struct Grid {
  std::vector<double> C_values;
  std::vector<double> gamma_values;
  std::vector<double> epsilon_values;

  /// C in 2^-2..2^8, gamma in 2^-10..2^0, epsilon in 2^-10..2^-2.
  static Grid defaults();
  /// 2^from, 2^(from+step), ..., up to 2^to inclusive.
  static std::vector<double> log2_range(double from, double to, double step = 1.0);

  void validate() const;
  [[nodiscard]] std::vector<Hyperparams> triples() const;
};

struct GridCell {
  Hyperparams hyper;
  std::optional<double> cv_error;  ///< empty when any fold failed to train
  std::string failure;
  bool convergence_failure = false;  ///< the failure was the solver's iteration cap
};

struct GridSearchResult {
  Hyperparams best;
  double cv_error = 0.0;
  std::vector<GridCell> cells;  ///< in canonical (sorted) triple order
};

struct SearchOptions {
  std::size_t workers = 1;
  SolverOptions solver;
};

/// Mean held-out MSE over the given folds (train on the other k-1 folds).
double cross_validation_error(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hyper,
                              const std::vector<std::vector<std::size_t>>& folds,
                              const std::optional<GreyWeights>& weights, const SolverOptions& solver = {});

/// Exhaustive search; the lowest CV error wins, ties go to smaller C, then
/// smaller gamma, then larger epsilon. Throws DataError when every cell fails,
/// or ConvergenceError when every cell failed to converge.
GridSearchResult grid_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Grid& grid,
                             const SplitPlan& plan, const std::optional<GreyWeights>& weights = std::nullopt,
                             const SearchOptions& options = {});

/// Row subset helpers.
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows);
Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<std::size_t>& rows);

}  // namespace greysvr
