#include "greysvr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "greysvr/error.hpp"
#include "greysvr/parallel.hpp"
#include "greysvr/random.hpp"

namespace greysvr {

RunMode parse_run_mode(std::string_view text) {
  if (text == "csvr") return RunMode::Classical;
  if (text == "fwsvr") return RunMode::Weighted;
  if (text == "compare") return RunMode::Compare;
  throw ConfigError("mode must be csvr, fwsvr or compare (got '" + std::string(text) + "')");
}

std::string_view run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Classical:
      return "csvr";
    case RunMode::Weighted:
      return "fwsvr";
    default:
      return "compare";
  }
}

namespace {

std::string fmt_double(double v) { return detail::format_real(v); }

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

std::string join(const std::vector<double>& values) {
  std::vector<std::string> items;
  for (double v : values) items.push_back(fmt_double(v));
  return join(items);
}

std::vector<std::string> parse_list(const std::string& key, const std::string& value) {
  std::vector<std::string> out;
  if (value.empty()) return out;
  for (auto item : detail::split(value, ',')) {
    if (item.empty()) throw ConfigError(key + ": empty list item");
    out.emplace_back(item);
  }
  return out;
}

double parse_real(const std::string& key, std::string_view value) {
  double v = 0.0;
  if (!detail::parse_double(value, v) || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + std::string(value) + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& value) {
  const std::uint64_t v = parse_count(key, value);
  if (v > 1'000'000'000) throw ConfigError(key + ": value too large");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "yes" || value == "1" || value == "on") return true;
  if (value == "false" || value == "no" || value == "0" || value == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

/// A list of reals, or `log2:from:to[:step]` for 2^from .. 2^to.
std::vector<double> parse_grid_axis(const std::string& key, const std::string& value) {
  if (value.rfind("log2:", 0) == 0) {
    const auto parts = detail::split(std::string_view(value).substr(5), ':');
    if (parts.size() != 2 && parts.size() != 3) throw ConfigError(key + ": expected log2:from:to[:step]");
    const double from = parse_real(key, parts[0]);
    const double to = parse_real(key, parts[1]);
    const double step = parts.size() == 3 ? parse_real(key, parts[2]) : 1.0;
    if (!(step > 0.0) || to < from) throw ConfigError(key + ": empty log2 range");
    return Grid::log2_range(from, to, step);
  }
  std::vector<double> out;
  for (const auto& item : parse_list(key, value)) {
    const double v = parse_real(key, item);
    if (!(v > 0.0)) throw ConfigError(key + ": grid values must be positive");
    out.push_back(v);
  }
  return out;
}

std::string replace_id(std::string pattern, const std::string& id) {
  for (std::size_t pos = pattern.find("{id}"); pos != std::string::npos; pos = pattern.find("{id}", pos + id.size())) {
    pattern.replace(pos, 4, id);
  }
  return pattern;
}

}  // namespace

void set_config_value(PipelineConfig& c, const std::string& key, const std::string& value) {
  if (key == "seed") {
    c.seed = parse_count(key, value);
  } else if (key == "mode") {
    c.mode = parse_run_mode(value);
  } else if (key == "out") {
    c.out = value;
  } else if (key == "workers") {
    c.workers = parse_count(key, value);
  } else if (key == "data.dir") {
    c.data_dir = value;
  } else if (key == "data.stocks") {
    c.stocks = parse_list(key, value);
  } else if (key == "data.index") {
    c.index = value;
  } else if (key.rfind("data.exo.", 0) == 0 && key.size() > 9) {
    c.exogenous[key.substr(9)] = value;
  } else if (key == "data.panel") {
    c.panel = value;
  } else if (key == "factors") {
    c.factors = parse_list(key, value);
  } else if (key == "gca.tau") {
    c.tau = parse_real(key, value);
    if (!(c.tau > 0.0 && c.tau < 1.0)) throw ConfigError("gca.tau must lie in (0, 1)");
  } else if (key == "gca.init") {
    c.init = parse_initial_operator(value);
  } else if (key == "screen.enabled") {
    c.screen = parse_bool(key, value);
  } else if (key == "screen.threshold") {
    c.screen_threshold = parse_real(key, value);
    if (!(c.screen_threshold >= 0.0 && c.screen_threshold <= 1.0)) throw ConfigError("screen.threshold must lie in [0, 1]");
  } else if (key == "screen.fraction") {
    c.screening.fraction = parse_real(key, value);
  } else if (key == "screen.repeats") {
    c.screening.repeats = parse_int(key, value);
  } else if (key == "screen.fail_metrics") {
    c.screening.fail_metrics = parse_int(key, value);
  } else if (key == "screen.fail_repeats") {
    c.screening.fail_repeats = parse_int(key, value);
  } else if (key == "screen.min_stocks") {
    c.screening.min_stocks = parse_count(key, value);
  } else if (key == "split.weight") {
    c.plan.weight_fraction = parse_real(key, value);
  } else if (key == "split.train") {
    c.plan.train_fraction = parse_real(key, value);
  } else if (key == "cv.k") {
    c.plan.k = parse_int(key, value);
  } else if (key == "grid.C") {
    c.grid.C_values = parse_grid_axis(key, value);
  } else if (key == "grid.gamma") {
    c.grid.gamma_values = parse_grid_axis(key, value);
  } else if (key == "grid.epsilon") {
    c.grid.epsilon_values = parse_grid_axis(key, value);
  } else if (key == "mad.k") {
    c.mad_k = parse_real(key, value);
    if (c.mad_k < 0.0) throw ConfigError("mad.k must be non-negative");
  } else if (key == "lag") {
    if (value == "same-day") {
      c.lag = LagMode::SameDay;
    } else if (value == "all") {
      c.lag = LagMode::All;
    } else {
      throw ConfigError("lag must be same-day or all");
    }
  } else if (key == "obv.price") {
    if (value == "open") {
      c.obv_price = ObvPrice::Open;
    } else if (value == "close") {
      c.obv_price = ObvPrice::Close;
    } else {
      throw ConfigError("obv.price must be open or close");
    }
  } else if (key == "ivr.aggregate") {
    if (value == "mean-abs") {
      c.ivr_aggregate = IvrAggregate::MeanAbs;
    } else if (value == "std") {
      c.ivr_aggregate = IvrAggregate::StdDev;
    } else {
      throw ConfigError("ivr.aggregate must be mean-abs or std");
    }
  } else if (key == "svr.tol") {
    c.solver.tolerance = parse_real(key, value);
    if (!(c.solver.tolerance > 0.0)) throw ConfigError("svr.tol must be positive");
  } else if (key == "svr.max_iter") {
    c.solver.max_iterations = parse_count(key, value);
  } else if (key == "backtest.ds_min") {
    c.backtest.ds_min = parse_real(key, value);
  } else if (key == "backtest.require_scc") {
    c.backtest.require_scc = parse_bool(key, value);
  } else if (key == "backtest.retrain") {
    c.backtest.retrain = parse_int(key, value);
    if (c.backtest.retrain < 1) throw ConfigError("backtest.retrain must be positive");
  } else if (key == "backtest.model") {
    const RunMode m = parse_run_mode(value);
    if (m == RunMode::Compare) throw ConfigError("backtest.model must be csvr or fwsvr");
    c.backtest.model = m == RunMode::Classical ? ModelKind::Classical : ModelKind::Weighted;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  std::size_t line_no = 0;
  for (auto line : detail::lines(text)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = detail::trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    try {
      set_config_value(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::filesystem::path PipelineConfig::resolve(const std::string& file) const {
  const std::filesystem::path p(file);
  if (p.is_absolute()) return p;
  return base_dir / data_dir / p;
}

void PipelineConfig::validate() const {
  if (!seed) throw ConfigError("seed is mandatory");
  if (stocks.empty()) throw ConfigError("data.stocks lists no files");
  try {
    plan.validate();
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  screening.validate();
  std::set<std::string> seen;
  for (const auto& s : stocks) {
    if (!seen.insert(stock_id_from_file(s)).second) throw ConfigError("duplicate stock id '" + stock_id_from_file(s) + "'");
    if (!std::filesystem::exists(resolve(s))) throw ConfigError("stock file not found: " + resolve(s).string());
  }
  if (index && !std::filesystem::exists(resolve(*index))) {
    throw ConfigError("index file not found: " + resolve(*index).string());
  }
  // Per-stock patterns are checked when each stock loads; fixed names here.
  for (const auto& [name, pattern] : exogenous) {
    if (pattern.find("{id}") == std::string::npos && !std::filesystem::exists(resolve(pattern))) {
      throw ConfigError("exogenous file for '" + name + "' not found: " + resolve(pattern).string());
    }
  }
  if (panel && panel->find("{id}") == std::string::npos && !std::filesystem::exists(resolve(*panel))) {
    throw ConfigError("panel file not found: " + resolve(*panel).string());
  }
}

std::uint64_t PipelineConfig::base_seed() const {
  if (!seed) throw ConfigError("seed is mandatory");
  return *seed;
}

PrepOptions PipelineConfig::prep_options() const {
  PrepOptions p;
  p.plan = plan;
  p.mad_k = mad_k;
  p.tau = tau;
  p.init = init;
  return p;
}

FitOptions PipelineConfig::fit_options(std::uint64_t fold_seed) const {
  FitOptions f;
  f.grid = grid;
  f.folds = plan.k;
  f.fold_seed = fold_seed;
  f.search.solver = solver;
  f.search.workers = 1;
  return f;
}

ScreenOptions PipelineConfig::screen_options() const {
  ScreenOptions so = screening;
  so.seed = derive_seed(base_seed(), "screening");
  so.prep = prep_options();
  so.fit = fit_options(0);
  so.workers = workers;
  return so;
}

std::uint64_t PipelineConfig::fold_seed(const std::string& stock_id) const {
  return derive_seed(base_seed(), "kfold/" + stock_id);
}

std::map<std::string, std::string> describe(const PipelineConfig& c) {
  std::map<std::string, std::string> d;
  d["seed"] = c.seed ? std::to_string(*c.seed) : "";
  d["mode"] = std::string(run_mode_name(c.mode));
  d["data.dir"] = c.data_dir.generic_string();
  d["data.stocks"] = join(c.stocks);
  if (c.index) d["data.index"] = *c.index;
  for (const auto& [name, pattern] : c.exogenous) d["data.exo." + name] = pattern;
  if (c.panel) d["data.panel"] = *c.panel;
  d["factors"] = join(c.factors);
  d["gca.tau"] = fmt_double(c.tau);
  d["gca.init"] = c.init == InitialOperator::None ? "none" : c.init == InitialOperator::Mean ? "mean" : "initial-value";
  d["screen.enabled"] = c.screen ? "true" : "false";
  d["screen.threshold"] = fmt_double(c.screen_threshold);
  d["screen.fraction"] = fmt_double(c.screening.fraction);
  d["screen.repeats"] = std::to_string(c.screening.repeats);
  d["screen.fail_metrics"] = std::to_string(c.screening.fail_metrics);
  d["screen.fail_repeats"] = std::to_string(c.screening.fail_repeats);
  d["screen.min_stocks"] = std::to_string(c.screening.min_stocks);
  d["split.weight"] = fmt_double(c.plan.weight_fraction);
  d["split.train"] = fmt_double(c.plan.train_fraction);
  d["cv.k"] = std::to_string(c.plan.k);
  d["grid.C"] = join(c.grid.C_values);
  d["grid.gamma"] = join(c.grid.gamma_values);
  d["grid.epsilon"] = join(c.grid.epsilon_values);
  d["mad.k"] = fmt_double(c.mad_k);
  d["lag"] = c.lag == LagMode::All ? "all" : "same-day";
  d["obv.price"] = c.obv_price == ObvPrice::Open ? "open" : "close";
  d["ivr.aggregate"] = c.ivr_aggregate == IvrAggregate::MeanAbs ? "mean-abs" : "std";
  d["svr.tol"] = fmt_double(c.solver.tolerance);
  d["svr.max_iter"] = std::to_string(c.solver.max_iterations);
  d["backtest.ds_min"] = fmt_double(c.backtest.ds_min);
  d["backtest.require_scc"] = c.backtest.require_scc ? "true" : "false";
  d["backtest.retrain"] = std::to_string(c.backtest.retrain);
  d["backtest.model"] = std::string(model_name(c.backtest.model));
  return d;
}

std::string stock_id_from_file(const std::string& file) {
  return std::filesystem::path(file).stem().string();
}

StockMatrix load_stock(const PipelineConfig& config, const std::string& file) {
  StockMatrix out;
  out.id = stock_id_from_file(file);
  const OhlcvSeries raw = load_ohlcv(config.resolve(file));
  OhlcvSeries ohlcv = drop_suspensions(raw);
  ohlcv.instrument_id = out.id;

  std::vector<NamedSeries> derived;
  if (config.index) {
    derived = build_technical_factors(ohlcv, load_exogenous(config.resolve(*config.index), "X16"));
  } else {
    derived = build_technical_factors(ohlcv, NamedSeries{"X16", {}, {}});
    derived.pop_back();
  }
  if (ohlcv.has_float_shares()) derived.push_back(turnover_rate(ohlcv));
  if (config.panel) {
    derived.push_back(ivr(load_factor_panel(config.resolve(replace_id(*config.panel, out.id))), 20,
                          config.ivr_aggregate));
  }
  derived.push_back(ar_index(ohlcv));
  derived.push_back(adtm(ohlcv));
  derived.push_back(obv(ohlcv, config.obv_price));

  std::vector<NamedSeries> exo;
  for (const auto& [name, pattern] : config.exogenous) {
    exo.push_back(load_exogenous(config.resolve(replace_id(pattern, out.id)), name));
  }

  if (!config.factors.empty()) {
    const auto wanted = [&](const NamedSeries& s) {
      return std::find(config.factors.begin(), config.factors.end(), s.name) != config.factors.end();
    };
    std::erase_if(derived, [&](const NamedSeries& s) { return !wanted(s); });
    std::erase_if(exo, [&](const NamedSeries& s) { return !wanted(s); });
    for (const auto& f : config.factors) {
      const auto has = [&](const std::vector<NamedSeries>& v) {
        return std::any_of(v.begin(), v.end(), [&](const NamedSeries& s) { return s.name == f; });
      };
      if (!has(derived) && !has(exo)) throw DataError(out.id + ": factor '" + f + "' is not available");
    }
  }

  // The previous close is already one day behind; everything else moves back
  // one trading day so a row only holds what was known before its close.
  if (config.lag == LagMode::All) {
    for (auto& s : derived) {
      if (s.name != "X15") s = lag_one(s);
    }
    for (auto& s : exo) s = lag_one(s);
  }

  out.matrix = align(ohlcv, exo, derived);
  if (!config.factors.empty()) out.matrix = out.matrix.select(config.factors);
  return out;
}

LoadedUniverse load_universe(const PipelineConfig& config) {
  const std::size_t n = config.stocks.size();
  std::vector<std::optional<StockMatrix>> loaded(n);
  std::vector<std::string> errors(n);
  parallel_for(n, config.workers, [&](std::size_t i) {
    try {
      loaded[i] = load_stock(config, config.stocks[i]);
    } catch (const DataError& e) {
      errors[i] = e.what();
    }
  });

  LoadedUniverse u;
  for (std::size_t i = 0; i < n; ++i) {
    if (loaded[i]) {
      u.stocks.push_back(std::move(*loaded[i]));
    } else {
      u.skipped.emplace_back(stock_id_from_file(config.stocks[i]), errors[i]);
    }
  }
  if (!config.factors.empty()) {
    u.factors = config.factors;
    return u;
  }
  if (u.stocks.empty()) return u;
  for (const auto& name : u.stocks.front().matrix.factor_names) {
    const bool everywhere = std::all_of(u.stocks.begin(), u.stocks.end(), [&](const StockMatrix& s) {
      return s.matrix.column_index(name).has_value();
    });
    if (everywhere) u.factors.push_back(name);
  }
  for (auto& s : u.stocks) {
    if (s.matrix.factor_names != u.factors) s.matrix = s.matrix.select(u.factors);
  }
  return u;
}

namespace {

ModelResult summarize(const FittedModel& f) {
  ModelResult r;
  r.kind = f.kind;
  r.best = f.search.best;
  r.cv_error = f.search.cv_error;
  r.failed_cells = static_cast<std::size_t>(
      std::count_if(f.search.cells.begin(), f.search.cells.end(), [](const GridCell& c) { return !c.cv_error; }));
  r.support_vectors = f.model.support_count();
  r.iterations = f.model.iterations;
  r.eval = f.eval;
  r.predicted = f.test_prediction;
  r.model = f.model;
  return r;
}

StockResult run_stock(const PipelineConfig& config, const StockMatrix& stock, const std::vector<std::string>& factors) {
  StockResult r;
  r.id = stock.id;
  try {
    const PreparedStock p = prepare_stock(stock.matrix.select(factors), config.prep_options());
    r.factors = p.factor_names;
    r.dropped = p.dropped;
    r.rows = stock.matrix.rows();
    r.weight_rows = p.split.weight.size();
    r.train_rows = p.split.train.size();
    r.test_rows = p.split.test.size();
    r.test_out_of_range = p.test_out_of_range;
    r.weights = p.weights;
    r.test_dates = p.test_dates;
    r.observed = p.test_close;

    const FitOptions fit = config.fit_options(config.fold_seed(stock.id));
    if (config.mode != RunMode::Weighted) r.csvr = summarize(fit_model(p, ModelKind::Classical, fit));
    if (config.mode != RunMode::Classical) r.fwsvr = summarize(fit_model(p, ModelKind::Weighted, fit));
  } catch (const ConvergenceError& e) {
    r.skip_reason = std::string("convergence: ") + e.what();
    r.csvr.reset();
    r.fwsvr.reset();
  } catch (const DataError& e) {
    r.skip_reason = e.what();
    r.csvr.reset();
    r.fwsvr.reset();
  } catch (const std::invalid_argument& e) {
    r.skip_reason = e.what();
    r.csvr.reset();
    r.fwsvr.reset();
  }
  return r;
}

}  // namespace

RunReport run_experiment(const PipelineConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  RunReport rep;
  rep.config = config;

  LoadedUniverse u = load_universe(config);
  for (const auto& [id, reason] : u.skipped) {
    StockResult r;
    r.id = id;
    r.skip_reason = reason;
    rep.stocks.push_back(std::move(r));
  }

  rep.factors = u.factors;
  if (!u.stocks.empty() && u.factors.empty()) {
    throw DataError("the loaded stocks share no factor column");
  }
  if (config.screen && !u.stocks.empty()) {
    rep.screening = screen_factors(u.stocks, config.screen_threshold, config.screen_options());
    rep.factors = rep.screening->selected;
  }

  std::vector<StockResult> results(u.stocks.size());
  parallel_for(u.stocks.size(), config.workers,
               [&](std::size_t i) { results[i] = run_stock(config, u.stocks[i], rep.factors); });
  for (auto& r : results) rep.stocks.push_back(std::move(r));
  std::sort(rep.stocks.begin(), rep.stocks.end(),
            [](const StockResult& a, const StockResult& b) { return a.id < b.id; });

  if (config.mode == RunMode::Compare) {
    std::vector<EvalReport> weighted;
    std::vector<EvalReport> classical;
    for (const auto& s : rep.stocks) {
      if (s.csvr && s.fwsvr) {
        weighted.push_back(s.fwsvr->eval);
        classical.push_back(s.csvr->eval);
      }
    }
    rep.comparison = compare(weighted, classical);
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace greysvr
