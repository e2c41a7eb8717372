#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "greysvr/experiment.hpp"

namespace greysvr {

/// A stock's regression dataset tagged with its instrument id.
struct StockMatrix {
  std::string id;
  FactorMatrix matrix;
};

struct PreliminaryResult {
  std::vector<std::string> names;     ///< factor order of the first stock
  std::vector<double> mean_degree;    ///< per name, over the stocks that kept the column
  std::vector<std::size_t> stocks;    ///< per name, how many stocks contributed
  std::vector<std::string> basic;     ///< mean degree >= threshold, in `names` order
  std::vector<std::string> observed;  ///< the rest
  std::vector<std::string> skipped;   ///< "id: reason" for stocks whose preparation failed
  double threshold = 0.6;
};

/// Averages per-stock degrees (rows = stocks, columns = `names`; NaN marks a
/// missing value) and splits the factors at `threshold`.
PreliminaryResult classify_factors(const std::vector<std::string>& names,
                                   const std::vector<std::vector<double>>& degrees, double threshold);

/// Grey degrees of every factor against the close, per stock, from the
/// weight block of the usual preparation; then averaged and split.
/// Throws DataError when the stocks do not share one factor name set.
PreliminaryResult preliminary_screen(const std::vector<StockMatrix>& stocks, double threshold = 0.6,
                                     const PrepOptions& prep = {});

struct ScreenOptions {
  double fraction = 0.1;
  int repeats = 3;
  int fail_metrics = 3;  ///< a repeat fails when this many win counts fall below half the sample
  int fail_repeats = 2;  ///< a factor is eliminated after this many failed repeats
  std::size_t min_stocks = 10;
  std::uint64_t seed = 0;
  PrepOptions prep;
  FitOptions fit;
  std::size_t workers = 1;

  void validate() const;
};

struct ScreenRepeat {
  std::vector<std::string> stocks;  ///< the sample, sorted by position in the input
  MetricCounts wins;                ///< stocks where FWSVR beat c-SVR
  std::size_t scc_pairs = 0;
  bool failed = false;
  std::string error;  ///< non-empty when a training failure aborted the repeat
};

enum class ScreenVerdict { Basic, Kept, Eliminated };

struct FactorScreening {
  std::string name;
  double mean_degree = 0.0;
  std::size_t degree_stocks = 0;
  bool observed = false;
  std::vector<ScreenRepeat> repeats;  ///< empty for basic factors
  ScreenVerdict verdict = ScreenVerdict::Basic;
};

struct ScreeningReport {
  double threshold = 0.6;
  ScreenOptions options;
  std::vector<FactorScreening> factors;  ///< preliminary order
  std::vector<std::string> selected;     ///< basic plus kept, preliminary order
  std::vector<std::string> skipped;
  std::string note;  ///< why random screening did not run, if it did not
};

std::string_view verdict_name(ScreenVerdict v);  ///< "basic" / "kept" / "eliminated"

/// Random SVR screening of the observed factors against a frozen basic set.
/// Each repeat draws a fresh sample of ceil(fraction * N) stocks (the same
/// sample for every observed factor) and fits both models on basic plus the
/// candidate. Throws DataError with fewer than `min_stocks` stocks.
ScreeningReport random_screen(const PreliminaryResult& preliminary, const std::vector<StockMatrix>& stocks,
                              const ScreenOptions& options);

/// Preliminary then random screening; random screening is skipped (every
/// observed factor kept) when there are too few stocks or nothing observed.
ScreeningReport screen_factors(const std::vector<StockMatrix>& stocks, double threshold,
                               const ScreenOptions& options);

}  // namespace greysvr
