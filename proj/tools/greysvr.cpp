// greysvr command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "greysvr/backtest.hpp"
#include "greysvr/error.hpp"
#include "greysvr/pipeline.hpp"
#include "greysvr/report.hpp"
#include "greysvr/synth.hpp"

namespace {

using namespace greysvr;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool lag_all = false;
  std::string mode;
  std::string out;
  std::optional<std::size_t> workers;
};

PipelineConfig load_with_overrides(const CommonFlags& f) {
  if (f.config.empty()) throw ConfigError("--config is required for this command");
  PipelineConfig c = load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.lag_all) c.lag = LagMode::All;
  if (!f.mode.empty()) c.mode = parse_run_mode(f.mode);
  if (!f.out.empty()) c.out = f.out;
  if (f.workers) c.workers = *f.workers;
  c.validate();
  return c;
}

std::filesystem::path out_dir(const PipelineConfig& c, const CommonFlags& f) {
  return f.out.empty() ? c.base_dir / c.out : std::filesystem::path(f.out);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw DataError("cannot write '" + path.string() + "'");
}

std::string num(double v, int digits = 6) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

int cmd_synth(const CommonFlags& f, SynthOptions o) {
  if (f.seed) o.seed = *f.seed;
  const std::filesystem::path dir = f.out.empty() ? "synth" : f.out;
  const auto universe = generate_universe(o);
  write_universe(dir, universe, o);
  std::cout << "wrote " << universe.size() << " stocks x " << o.days << " days to " << dir.string()
            << " (config: " << (dir / "universe.conf").string() << ")\n";
  return 0;
}

int cmd_ingest_check(const CommonFlags& f) {
  const PipelineConfig c = load_with_overrides(f);
  const LoadedUniverse u = load_universe(c);
  std::cout << "id\trows\tfirst\tlast\tfactors\n";
  for (const auto& s : u.stocks) {
    const auto& m = s.matrix;
    std::cout << s.id << "\t" << m.rows() << "\t" << format_date(m.dates.front()) << "\t"
              << format_date(m.dates.back()) << "\t" << m.cols() << "\n";
  }
  std::cout << "common factors:";
  for (const auto& n : u.factors) std::cout << " " << n;
  std::cout << "\n";
  for (const auto& [id, reason] : u.skipped) std::cerr << "skipped " << id << ": " << reason << "\n";
  return u.skipped.empty() ? 0 : 2;
}

int cmd_screen(const CommonFlags& f) {
  const PipelineConfig c = load_with_overrides(f);
  const LoadedUniverse u = load_universe(c);
  if (u.stocks.empty()) throw DataError("no stock could be loaded");
  const ScreeningReport rep = screen_factors(u.stocks, c.screen_threshold, c.screen_options());

  std::cout << "factor\tmean_degree\tclass\tverdict\trepeats(mse/mae/ds/scc)\n";
  for (const auto& fs : rep.factors) {
    std::cout << fs.name << "\t" << num(fs.mean_degree) << "\t" << (fs.observed ? "observed" : "basic") << "\t"
              << verdict_name(fs.verdict) << "\t";
    for (const auto& r : fs.repeats) {
      if (!r.error.empty()) {
        std::cout << "[error] ";
        continue;
      }
      std::cout << r.wins.mse << "/" << r.wins.mae << "/" << r.wins.ds << "/" << r.wins.scc << (r.failed ? "F " : " ");
    }
    std::cout << "\n";
  }
  if (!rep.note.empty()) std::cout << rep.note << "\n";
  const auto path = out_dir(c, f) / "screening.json";
  write_file(path, to_json(rep).dump(2) + "\n");
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_tune(const CommonFlags& f) {
  const PipelineConfig c = load_with_overrides(f);
  const LoadedUniverse u = load_universe(c);
  std::string tsv = "id\tmodel\tC\tepsilon\tgamma\tcv_error\tfailed_cells\n";
  for (const auto& [id, reason] : u.skipped) std::cerr << "skipped " << id << ": " << reason << "\n";
  for (const auto& s : u.stocks) {
    try {
      const PreparedStock p = prepare_stock(s.matrix, c.prep_options());
      const FitOptions fit = c.fit_options(c.fold_seed(s.id));
      SplitPlan plan = c.plan;
      plan.seed = fit.fold_seed;
      for (ModelKind kind : {ModelKind::Classical, ModelKind::Weighted}) {
        if ((kind == ModelKind::Classical && c.mode == RunMode::Weighted) ||
            (kind == ModelKind::Weighted && c.mode == RunMode::Classical)) {
          continue;
        }
        const auto w = kind == ModelKind::Weighted ? std::optional(p.weights) : std::nullopt;
        SearchOptions so = fit.search;
        so.workers = c.workers;
        const GridSearchResult g = grid_search(p.x_train, p.y_train, c.grid, plan, w, so);
        const auto failed = std::count_if(g.cells.begin(), g.cells.end(), [](const GridCell& x) { return !x.cv_error; });
        tsv += s.id + "\t" + std::string(model_name(kind)) + "\t" + num(g.best.C, 17) + "\t" + num(g.best.epsilon, 17) +
               "\t" + num(g.best.gamma, 17) + "\t" + num(g.cv_error, 17) + "\t" + std::to_string(failed) + "\n";
      }
    } catch (const DataError& e) {
      std::cerr << "skipped " << s.id << ": " << e.what() << "\n";
    }
  }
  std::cout << tsv;
  write_file(out_dir(c, f) / "tune.tsv", tsv);
  return 0;
}

int cmd_run(const CommonFlags& f, std::optional<RunMode> forced, bool save_models) {
  PipelineConfig c = load_with_overrides(f);
  if (forced) c.mode = *forced;
  const RunReport rep = run_experiment(c);
  const auto dir = out_dir(c, f);
  auto written = write_report(rep, dir);
  const auto plots = emit_plot_data(rep, dir / "plots");
  written.insert(written.end(), plots.begin(), plots.end());
  if (save_models) {
    for (const auto& s : rep.stocks) {
      for (const auto* m : {&s.csvr, &s.fwsvr}) {
        if (!*m) continue;
        const auto path = dir / "models" / (s.id + "." + std::string(model_name((*m)->kind)) + ".model");
        std::filesystem::create_directories(path.parent_path());
        save_model(path, (*m)->model);
        written.push_back(path);
      }
    }
  }

  std::cout << "id\tmodel\tmse\tmae\tds\tscc\n";
  std::size_t skipped = 0;
  for (const auto& s : rep.stocks) {
    if (!s.skip_reason.empty()) {
      ++skipped;
      std::cout << s.id << "\tskipped\t" << s.skip_reason << "\n";
      continue;
    }
    for (const auto* m : {&s.csvr, &s.fwsvr}) {
      if (!*m) continue;
      const EvalReport& e = (*m)->eval;
      std::cout << s.id << "\t" << model_name((*m)->kind) << "\t" << num(e.mse) << "\t" << num(e.mae) << "\t"
                << num(e.ds) << "\t" << (e.scc ? num(*e.scc) : "NA") << "\n";
    }
  }
  if (rep.comparison) {
    const auto& cmp = *rep.comparison;
    std::cout << "fwsvr better than csvr on " << cmp.n_stocks << " stocks: MSE " << cmp.wins.mse << ", MAE "
              << cmp.wins.mae << ", DS " << cmp.wins.ds << ", SCC " << cmp.wins.scc << " of " << cmp.scc_pairs << "\n";
    std::cout << "mean improvement %: MSE " << num(cmp.improvement_pct.mse, 4) << ", MAE "
              << num(cmp.improvement_pct.mae, 4) << ", DS " << num(cmp.improvement_pct.ds, 4) << ", SCC "
              << num(cmp.improvement_pct.scc, 4) << "\n";
  }
  std::cout << "wrote " << written.size() << " files under " << dir.string() << "\n";
  return skipped == rep.stocks.size() && !rep.stocks.empty() ? 2 : 0;
}

/// Reads `date,<factor>,...`; columns are matched to the model's feature names.
int cmd_predict(const std::string& model_path, const std::string& input_path, const std::string& out) {
  const SvrModel model = load_model(model_path);
  std::ifstream in(input_path);
  if (!in) throw DataError("cannot read '" + input_path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(input_path + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  }
  std::vector<std::size_t> column;
  for (const auto& name : model.feature_names) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(input_path + ": missing column '" + name + "'");
    column.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::string> dates;
  std::vector<std::vector<double>> rows;
  for (std::size_t row = 1; std::getline(in, line); ++row) {
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != header.size()) throw DataError(input_path + ": row " + std::to_string(row) + " has wrong width");
    std::vector<double> values;
    for (std::size_t c : column) {
      try {
        values.push_back(std::stod(cells[c]));
      } catch (const std::exception&) {
        throw DataError(input_path + ": row " + std::to_string(row) + " has a non-numeric value");
      }
    }
    dates.push_back(cells.front());
    rows.push_back(std::move(values));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(column.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < column.size(); ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  const auto pred = predict_prices(model, x);
  std::string text = "date\tpredicted_close\n";
  for (std::size_t i = 0; i < pred.size(); ++i) text += dates[i] + "\t" + num(pred[i], 17) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return 0;
}

int cmd_backtest(const CommonFlags& f) {
  const PipelineConfig c = load_with_overrides(f);
  RunReport rep;
  const BacktestResult bt = backtest(c, &rep);
  const auto dir = out_dir(c, f);
  write_report(rep, dir);
  write_file(dir / "trades.tsv", trades_tsv(bt));
  write_file(dir / "equity.tsv", equity_tsv(bt));
  std::cout << "forecast set (" << bt.admitted.size() << "):";
  for (const auto& id : bt.admitted) std::cout << " " << id;
  std::cout << "\n";
  for (const auto& r : bt.rejected) std::cout << "not admitted " << r << "\n";
  const double final_equity = bt.days.empty() ? 1.0 : bt.days.back().equity;
  std::cout << bt.trades.size() << " trades over " << bt.days.size() << " days; cumulative return "
            << num((final_equity - 1.0) * 100.0, 4) << "%\n";
  std::cout << "wrote " << (dir / "trades.tsv").string() << " and " << (dir / "equity.tsv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-weighted SVR forecasting with grey correlation weights"};
  app.require_subcommand(1);
  CommonFlags flags;
  app.add_option("--config", flags.config, "pipeline config file (key = value)");
  app.add_option("--seed", flags.seed, "override the config seed");
  app.add_flag("--lag-all", flags.lag_all, "lag every factor by one trading day");
  app.add_option("--mode", flags.mode, "csvr | fwsvr | compare")->check(CLI::IsMember({"csvr", "fwsvr", "compare"}));
  app.add_option("--out", flags.out, "output directory");
  app.add_option("--workers", flags.workers, "worker threads (0 = all cores)");
  app.fallthrough();

  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic universe");
  SynthOptions so;
  synth->add_option("--stocks", so.stocks, "number of stocks")->capture_default_str();
  synth->add_option("--days", so.days, "trading days per stock")->capture_default_str();
  synth->add_option("--signal", so.signal_factors, "planted signal factors")->capture_default_str();
  synth->add_option("--noise", so.noise_factors, "distractor factors")->capture_default_str();

  auto* ingest = app.add_subcommand("ingest-check", "load every stock and report rows and factors");
  auto* screen = app.add_subcommand("screen", "two-step factor screening");
  auto* tune = app.add_subcommand("tune", "grid search per stock");
  auto* train = app.add_subcommand("train", "tune, fit and save models");
  auto* predict = app.add_subcommand("predict", "predict closes from raw factor rows with a saved model");
  std::string model_path;
  std::string input_path;
  predict->add_option("--model", model_path, "saved model file")->required();
  predict->add_option("--input", input_path, "CSV: date,<factor>,...")->required();
  auto* evaluate = app.add_subcommand("evaluate", "run the pipeline in the configured mode and write the report");
  auto* compare = app.add_subcommand("compare", "fit FWSVR and c-SVR per stock and compare them");
  auto* bt = app.add_subcommand("backtest", "stock-selection backtest (needs --lag-all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) return cmd_synth(flags, so);
    if (*ingest) return cmd_ingest_check(flags);
    if (*screen) return cmd_screen(flags);
    if (*tune) return cmd_tune(flags);
    if (*train) return cmd_run(flags, std::nullopt, true);
    if (*predict) return cmd_predict(model_path, input_path, flags.out);
    if (*evaluate) return cmd_run(flags, std::nullopt, false);
    if (*compare) return cmd_run(flags, RunMode::Compare, false);
    if (*bt) return cmd_backtest(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
