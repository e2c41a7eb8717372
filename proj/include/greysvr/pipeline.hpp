#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "greysvr/experiment.hpp"
#include "greysvr/indicators.hpp"
#include "greysvr/screening.hpp"

namespace greysvr {

enum class RunMode { Classical, Weighted, Compare };
enum class LagMode { SameDay, All };

RunMode parse_run_mode(std::string_view text);  ///< "csvr" | "fwsvr" | "compare"
std::string_view run_mode_name(RunMode mode);

/// Admission rule of the stock-selection backtest.
struct BacktestOptions {
  double ds_min = 50.0;      ///< DS on the test block must exceed this
  bool require_scc = true;   ///< SCC on the test block must be defined
  int retrain = 20;          ///< refit every this many days of the trading period
  ModelKind model = ModelKind::Weighted;
};

/// Flat `key = value` configuration. Relative paths resolve against the
/// directory of the config file (or the working directory for text input).
struct PipelineConfig {
  std::optional<std::uint64_t> seed;
  RunMode mode = RunMode::Compare;
  std::filesystem::path out = "out";
  std::size_t workers = 1;

  std::filesystem::path data_dir = ".";
  std::vector<std::string> stocks;                  ///< OHLCV files under data_dir
  std::optional<std::string> index;                 ///< market index file (X16)
  std::map<std::string, std::string> exogenous;     ///< name -> file pattern, `{id}` = stock id
  std::optional<std::string> panel;                 ///< factor-return panel pattern (X32)
  std::vector<std::string> factors;                 ///< empty: every factor all stocks provide

  double tau = 0.5;
  InitialOperator init = InitialOperator::None;
  bool screen = true;
  double screen_threshold = 0.6;
  ScreenOptions screening;  ///< seed, prep, fit and workers are filled in by the pipeline

  SplitPlan plan;
  Grid grid = Grid::defaults();
  double mad_k = 5.0;
  LagMode lag = LagMode::SameDay;
  ObvPrice obv_price = ObvPrice::Open;
  IvrAggregate ivr_aggregate = IvrAggregate::MeanAbs;
  SolverOptions solver;
  BacktestOptions backtest;

  std::filesystem::path base_dir = ".";

  /// Throws ConfigError on a missing seed, empty stock list or missing path.
  void validate() const;
  [[nodiscard]] std::uint64_t base_seed() const;
  [[nodiscard]] PrepOptions prep_options() const;
  [[nodiscard]] FitOptions fit_options(std::uint64_t fold_seed) const;
  /// `screening` with the seed, preparation, fit and workers filled in.
  [[nodiscard]] ScreenOptions screen_options() const;
  /// Fold seed of one stock's grid search.
  [[nodiscard]] std::uint64_t fold_seed(const std::string& stock_id) const;
  [[nodiscard]] std::filesystem::path resolve(const std::string& file) const;
};

/// Throws ConfigError on unknown keys and malformed values.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies one `key = value` setting on top of a parsed config.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);

/// Every effective setting as `key -> text`, in the config-file syntax.
std::map<std::string, std::string> describe(const PipelineConfig& config);

/// Stock id from an OHLCV file name (its stem).
std::string stock_id_from_file(const std::string& file);

/// Ingest, indicators, lagging and alignment for one stock. All columns the
/// inputs support are built, then narrowed to `config.factors` when set.
StockMatrix load_stock(const PipelineConfig& config, const std::string& file);

struct LoadedUniverse {
  std::vector<StockMatrix> stocks;                         ///< input order
  std::vector<std::pair<std::string, std::string>> skipped;  ///< id, reason
  std::vector<std::string> factors;                         ///< common factor set
};

/// Loads every stock; failures become skip records. Without `config.factors`
/// the columns are cut to the set every loaded stock provides.
LoadedUniverse load_universe(const PipelineConfig& config);

struct ModelResult {
  ModelKind kind = ModelKind::Classical;
  Hyperparams best;
  double cv_error = 0.0;
  std::size_t failed_cells = 0;
  std::size_t support_vectors = 0;
  std::uint64_t iterations = 0;
  EvalReport eval;
  std::vector<double> predicted;  ///< price units, test dates
  SvrModel model;
};

struct StockResult {
  std::string id;
  std::string skip_reason;  ///< non-empty: no models were fitted
  std::vector<std::string> factors;
  std::vector<std::string> dropped;
  std::size_t rows = 0;
  std::size_t weight_rows = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  bool test_out_of_range = false;
  GreyWeights weights;
  std::vector<Date> test_dates;
  std::vector<double> observed;  ///< raw close on test dates
  std::optional<ModelResult> csvr;
  std::optional<ModelResult> fwsvr;
};

struct RunReport {
  PipelineConfig config;
  std::vector<StockResult> stocks;  ///< sorted by id
  std::optional<ScreeningReport> screening;
  std::vector<std::string> factors;  ///< after screening
  std::optional<ComparisonSummary> comparison;  ///< fwsvr against csvr, compare mode
  double wall_time = 0.0;  ///< seconds
};

/// The full per-stock pipeline. Per-stock failures become skip records;
/// config and IO problems throw.
RunReport run_experiment(const PipelineConfig& config);

}  // namespace greysvr
