#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "greysvr/backtest.hpp"
#include "greysvr/error.hpp"
#include "greysvr/pipeline.hpp"
#include "greysvr/random.hpp"
#include "greysvr/report.hpp"
#include "greysvr/synth.hpp"

using namespace greysvr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A fresh synthetic universe on disk with a small grid appended to its config.
struct Universe {
  fs::path dir;
  std::vector<SynthStock> stocks;

  Universe(const std::string& name, std::size_t count, std::size_t days = 150, std::uint64_t seed = 7) {
    dir = fs::temp_directory_path() / ("greysvr_" + name);
    fs::remove_all(dir);
    SynthOptions o;
    o.stocks = count;
    o.days = days;
    o.seed = seed;
    stocks = generate_universe(o);
    write_universe(dir, stocks, o);
    std::ofstream conf(dir / "universe.conf", std::ios::app);
    conf << "grid.C = 1, 16\ngrid.gamma = 0.25, 1\ngrid.epsilon = 0.01, 0.1\ncv.k = 5\n";
  }
  ~Universe() { fs::remove_all(dir); }

  [[nodiscard]] PipelineConfig config() const { return load_config(dir / "universe.conf"); }
};

Date jan(int day) { return std::chrono::year{2020} / 1 / day; }

RunReport without_clock(RunReport r) {
  r.wall_time = 0.0;
  return r;
}

std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    if (!line.empty() && line.back() == '\t') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "# comment\n"
      "seed = 5   # trailing comment\n"
      "\n"
      "mode = fwsvr\n"
      "data.stocks = a.csv, b.csv\n"
      "data.exo.RAIN = weather/{id}.csv\n"
      "grid.C = log2:-2:2:2\n"
      "grid.gamma = 0.5\n"
      "split.train = 0.75\n"
      "lag = all\n"
      "screen.enabled = false\n",
      "/data/run");
  CHECK(c.seed == 5u);
  CHECK(c.mode == RunMode::Weighted);
  CHECK(c.stocks == std::vector<std::string>{"a.csv", "b.csv"});
  CHECK(c.exogenous.at("RAIN") == "weather/{id}.csv");
  CHECK(c.grid.C_values == std::vector<double>{0.25, 1.0, 4.0});
  CHECK(c.grid.gamma_values == std::vector<double>{0.5});
  CHECK(c.plan.train_fraction == 0.75);
  CHECK(c.lag == LagMode::All);
  CHECK(!c.screen);
  CHECK(c.resolve("a.csv") == fs::path("/data/run/./a.csv"));
  CHECK(stock_id_from_file("dir/600000.csv") == "600000");

  // The echo reads back to the same settings.
  std::string echo;
  for (const auto& [k, v] : describe(c)) echo += k + " = " + v + "\n";
  CHECK(describe(parse_config(echo, "/data/run")) == describe(c));
}

TEST_CASE("config errors") {
  CHECK_THROWS_WITH_AS(parse_config("seed = 1\nbogus = 2\n"), "config line 2: unknown config key 'bogus'", ConfigError);
  CHECK_THROWS_AS(parse_config("seed = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("gca.tau = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("grid.C = 0, 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("mode = svm\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lag = yesterday\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("backtest.model = compare\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/greysvr.conf"), ConfigError);

  auto c = parse_config("data.stocks = a.csv\n", fs::temp_directory_path());
  CHECK_THROWS_WITH_AS(c.validate(), "seed is mandatory", ConfigError);
  c.seed = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);  // a.csv does not exist
}

TEST_CASE("named sub-seeds come from the one config seed") {
  auto c = parse_config("seed = 3\n");
  const auto a = c.fold_seed("X");
  CHECK(a == c.fold_seed("X"));
  CHECK(a != c.fold_seed("Y"));
  CHECK(c.screen_options().seed != a);
  c.seed = 4;
  CHECK(c.fold_seed("X") != a);
}

TEST_CASE("compare runs are reproducible and independent of worker count") {
  const Universe u("pipe_det", 3);
  auto c = u.config();
  const std::string first = report_text(without_clock(run_experiment(c)));
  const std::string second = report_text(without_clock(run_experiment(c)));
  CHECK(first == second);
  c.workers = 3;
  const RunReport parallel = run_experiment(c);
  c.workers = 1;
  RunReport p = without_clock(parallel);
  p.config.workers = 1;
  CHECK(report_text(p) == first);

  const auto doc = nlohmann::json::parse(first);
  CHECK(doc["stocks"].size() == 3);
  CHECK(doc["comparison"]["n_stocks"] == 3);
  CHECK(!doc["screening"]["note"].get<std::string>().empty());
}

TEST_CASE("a single stock is enough for a comparison") {
  const Universe u("pipe_one", 1);
  const RunReport r = run_experiment(u.config());
  REQUIRE(r.stocks.size() == 1);
  CHECK(r.stocks[0].skip_reason.empty());
  REQUIRE(r.comparison.has_value());
  CHECK(r.comparison->n_stocks == 1);
  CHECK(r.stocks[0].csvr->predicted.size() == r.stocks[0].test_rows);
}

TEST_CASE("one corrupt file becomes a skip record") {
  const Universe u("pipe_corrupt", 5);
  {
    std::ofstream bad(u.dir / "SYN003.csv");
    bad << "date,open,high,low,close,volume,amount\n2015-01-05,abc,1,1,1,1,1\n";
  }
  const RunReport r = run_experiment(u.config());
  REQUIRE(r.stocks.size() == 5);
  std::size_t ok = 0;
  for (const auto& s : r.stocks) {
    if (s.id == "SYN003") {
      CHECK(!s.skip_reason.empty());
      CHECK(!s.csvr.has_value());
    } else {
      ok += s.skip_reason.empty() && s.csvr && s.fwsvr ? 1 : 0;
    }
  }
  CHECK(ok == 4);
  CHECK(r.comparison->n_stocks == 4);
}

TEST_CASE("a requested factor that a stock lacks is a data error for that stock") {
  const Universe u("pipe_missing", 2);
  auto c = u.config();
  c.factors.push_back("X33");  // AR needs only OHLC, so it is available
  c.factors.push_back("RAIN");
  const auto loaded = load_universe(c);
  CHECK(loaded.stocks.empty());
  CHECK(loaded.skipped.size() == 2);
}

TEST_CASE("lagging shifts every factor but the previous close") {
  const Universe u("pipe_lag", 1);
  auto c = u.config();
  c.factors = {"S1", "X15"};
  const StockMatrix same = load_stock(c, c.stocks[0]);
  c.lag = LagMode::All;
  const StockMatrix lagged = load_stock(c, c.stocks[0]);
  // X15 already starts on the second date, so both matrices cover the same
  // dates; lagged S1 holds the previous row's value, X15 is untouched.
  REQUIRE(lagged.matrix.rows() == same.matrix.rows());
  CHECK(lagged.matrix.dates == same.matrix.dates);
  CHECK(lagged.matrix.values.col(1) == same.matrix.values.col(1));
  CHECK(lagged.matrix.values(0, 0) == u.stocks[0].factors[0].values[0]);
  for (Eigen::Index i = 1; i < lagged.matrix.values.rows(); ++i) {
    CHECK(lagged.matrix.values(i, 0) == same.matrix.values(i - 1, 0));
  }
}

}  // TEST_SUITE

TEST_SUITE("report") {

TEST_CASE("run reports satisfy the schema; broken documents do not") {
  const Universe u("report_schema", 2);
  const RunReport r = run_experiment(u.config());
  auto doc = to_json(r);
  CHECK(schema_violations(doc, report_schema()).empty());
  CHECK(doc["schema"] == kReportSchemaId);

  auto missing = doc;
  missing.erase("schema");
  CHECK(!schema_violations(missing, report_schema()).empty());
  auto wrong = doc;
  wrong["wall_time_seconds"] = "soon";
  CHECK(!schema_violations(wrong, report_schema()).empty());
  auto negative = doc;
  negative["stocks"][0]["models"]["csvr"]["metrics"]["mse"] = -1.0;
  CHECK(!schema_violations(negative, report_schema()).empty());
  auto extra = doc;
  extra["surprise"] = 1;
  CHECK(!schema_violations(extra, report_schema()).empty());
}

TEST_CASE("plot data for one stock") {
  const Universe u("report_plot", 1);
  const RunReport r = run_experiment(u.config());
  const fs::path out = u.dir / "plots";
  const auto files = emit_plot_data(r, out);
  CHECK(files.size() == 3);

  const auto series = read_tsv(out / "series_SYN001.tsv");
  REQUIRE(series.size() == r.stocks[0].test_rows + 1);
  CHECK(series[0] == std::vector<std::string>{"date", "observed", "csvr", "fwsvr"});
  const auto& ohlcv = u.stocks[0].ohlcv;
  for (std::size_t i = 1; i < series.size(); ++i) {
    const Date d = parse_date(series[i][0]);
    const auto bar = std::find_if(ohlcv.rows.begin(), ohlcv.rows.end(), [&](const OhlcvBar& b) { return b.date == d; });
    REQUIRE(bar != ohlcv.rows.end());
    CHECK(std::stod(series[i][1]) == bar->close);
    CHECK(std::stod(series[i][3]) == r.stocks[0].fwsvr->predicted[i - 1]);
  }

  const auto weights = read_tsv(out / "weights.tsv");
  REQUIRE(weights.size() == 2);
  double total = 0.0;
  for (std::size_t c = 1; c < weights[1].size(); ++c) total += std::stod(weights[1][c]);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const auto wins = read_tsv(out / "wins.tsv");
  CHECK(wins.size() == 5);
  CHECK(wins[1][0] == "MSE");
}

TEST_CASE("written report and evaluations") {
  const Universe u("report_write", 2);
  const RunReport r = run_experiment(u.config());
  const auto files = write_report(r, u.dir / "out");
  CHECK(files.size() == 2);
  const std::string text = slurp(u.dir / "out" / "report.json");
  CHECK(text == report_text(r));
  CHECK(text.back() == '\n');
  const auto tsv = read_tsv(u.dir / "out" / "evaluations.tsv");
  CHECK(tsv.size() == 1 + 2 * 2);
}

}  // TEST_SUITE

TEST_SUITE("backtest") {

TEST_CASE("perfect foresight reaches the best achievable equity") {
  // Three stocks over four days; every holding schedule is enumerated.
  SplitMix64 rng(17);
  std::vector<TradingPath> paths(3);
  for (std::size_t s = 0; s < paths.size(); ++s) {
    paths[s].id = "P" + std::to_string(s);
    double price = 10.0;
    for (int d = 0; d < 4; ++d) {
      paths[s].dates.push_back(jan(6 + d));
      paths[s].prev_close.push_back(price);
      price *= 1.0 + 0.1 * (rng.uniform() - 0.5);
      paths[s].close.push_back(price);
    }
  }
  const auto result = simulate_backtest(paths, [&](std::size_t s, std::size_t k) { return paths[s].close[k]; });

  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << 12); ++mask) {
    double equity = 1.0;
    for (int d = 0; d < 4; ++d) {
      double r = 0.0;
      for (std::size_t s = 0; s < 3; ++s) {
        if (mask & (1u << (d * 3 + static_cast<int>(s)))) r += (paths[s].close[d] / paths[s].prev_close[d] - 1.0) / 3.0;
      }
      equity *= 1.0 + r;
    }
    best = std::max(best, equity);
  }
  REQUIRE(result.days.size() == 4);
  CHECK(result.days.back().equity == doctest::Approx(best).epsilon(1e-14));
  CHECK(result.days.back().equity >= 1.0);
}

TEST_CASE("a flat forecast never trades") {
  std::vector<TradingPath> paths{{"A", {jan(6), jan(7)}, {10.0, 11.0}, {11.0, 12.0}}};
  const auto result = simulate_backtest(paths, [&](std::size_t s, std::size_t k) { return paths[s].prev_close[k]; });
  CHECK(result.trades.empty());
  for (const auto& d : result.days) {
    CHECK(d.equity == 1.0);
    CHECK(d.held.empty());
  }
}

TEST_CASE("trades are logged on state changes and idle slots stay in cash") {
  std::vector<TradingPath> paths{
      {"A", {jan(6), jan(7), jan(8)},
       {10.0, 11.0, 12.0}, {11.0, 12.0, 11.0}},
      {"B", {jan(7)}, {20.0}, {22.0}},
  };
  const std::vector<std::vector<double>> pred{{12.0, 12.0, 11.0}, {21.0}};
  const auto result = simulate_backtest(paths, [&](std::size_t s, std::size_t k) { return pred[s][k]; });
  REQUIRE(result.days.size() == 3);
  CHECK(result.days[0].portfolio_return == doctest::Approx(0.05));
  CHECK(result.days[1].portfolio_return == doctest::Approx(0.5 * (1.0 / 11.0) + 0.05));
  CHECK(result.days[2].portfolio_return == 0.0);
  REQUIRE(result.trades.size() == 3);
  CHECK(result.trades[0].id == "A");
  CHECK(result.trades[0].buy);
  CHECK(result.trades[1].id == "B");
  CHECK(!result.trades[2].buy);
}

TEST_CASE("admission rule") {
  BacktestOptions o;
  CHECK(admit({1.0, 1.0, 60.0, 0.5}, o));
  CHECK(!admit({1.0, 1.0, 50.0, 0.5}, o));
  CHECK(!admit({1.0, 1.0, 60.0, std::nullopt}, o));
  o.require_scc = false;
  CHECK(admit({1.0, 1.0, 60.0, std::nullopt}, o));
}

TEST_CASE("the driver refuses same-day factors") {
  const Universe u("bt_refuse", 1);
  CHECK_THROWS_AS(backtest(u.config()), ConfigError);
}

TEST_CASE("an unreachable admission threshold leaves a flat curve") {
  const Universe u("bt_flat", 2);
  auto c = u.config();
  c.lag = LagMode::All;
  c.backtest.ds_min = 100.0;
  const auto result = backtest(c);
  CHECK(result.rejected.size() == 2);
  CHECK(result.trades.empty());
  CHECK(!result.days.empty());
  for (const auto& d : result.days) CHECK(d.equity == 1.0);
}

TEST_CASE("equity compounds the daily returns") {
  const Universe u("bt_equity", 3);
  auto c = u.config();
  c.lag = LagMode::All;
  c.backtest.ds_min = 0.0;
  c.backtest.retrain = 7;
  const auto result = backtest(c);
  CHECK(result.admitted.size() + result.rejected.size() == 3);
  double equity = 1.0;
  for (const auto& d : result.days) {
    equity *= 1.0 + d.portfolio_return;
    CHECK(d.equity == doctest::Approx(equity).epsilon(1e-14));
    CHECK(d.held.size() <= result.admitted.size());
  }
  const std::string tsv = equity_tsv(result);
  const auto lines = std::count(tsv.begin(), tsv.end(), '\n');
  CHECK(static_cast<std::size_t>(lines) == result.days.size() + 1);
}

}  // TEST_SUITE
