#pragma once

#include <optional>
#include <span>
#include <vector>

namespace greysvr {

/// The four evaluation indices for one (stock, model) pair. `scc` is empty
/// when either series is constant.
struct EvalReport {
  double mse = 0.0;
  double mae = 0.0;
  double ds = 0.0;  ///< percent, [0, 100]
  std::optional<double> scc;
};

struct MetricCounts {
  std::size_t mse = 0;
  std::size_t mae = 0;
  std::size_t ds = 0;
  std::size_t scc = 0;
};

struct MetricMeans {
  double mse = 0.0;
  double mae = 0.0;
  double ds = 0.0;
  double scc = 0.0;
};

/// Head-to-head summary of model A against baseline B over aligned stocks.
struct ComparisonSummary {
  std::size_t n_stocks = 0;
  std::size_t scc_pairs = 0;   ///< stocks where both SCC values are defined
  MetricCounts wins;           ///< stocks where A is strictly better
  MetricMeans improvement_pct; ///< mean relative improvement of A over B, percent
};

double mse(std::span<const double> observed, std::span<const double> predicted);
double mae(std::span<const double> observed, std::span<const double> predicted);
/// Share of steps t = 2..N whose observed and predicted changes agree in sign
/// (product >= 0), in percent.
double ds(std::span<const double> observed, std::span<const double> predicted);
/// Squared Pearson correlation; empty for a constant series.
std::optional<double> scc(std::span<const double> observed, std::span<const double> predicted);

EvalReport evaluate(std::span<const double> observed, std::span<const double> predicted);

/// Wins: lower MSE/MAE, higher DS/SCC. Improvements: (b - a)/b for errors and
/// (a - b)/b for scores, averaged over all stocks (SCC over defined pairs).
/// Pairs with a zero baseline contribute 0 to the mean.
ComparisonSummary compare(std::span<const EvalReport> a, std::span<const EvalReport> b);

}  // namespace greysvr
