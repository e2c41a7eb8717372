#include "greysvr/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>

#include "greysvr/error.hpp"
#include "greysvr/parallel.hpp"
#include "greysvr/random.hpp"

namespace greysvr {

PreliminaryResult classify_factors(const std::vector<std::string>& names,
                                   const std::vector<std::vector<double>>& degrees, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("screening threshold must lie in [0, 1]");
  PreliminaryResult r;
  r.names = names;
  r.threshold = threshold;
  for (std::size_t f = 0; f < names.size(); ++f) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : degrees) {
      if (row.size() != names.size()) throw std::invalid_argument("degree row length differs from factor count");
      if (std::isnan(row[f])) continue;
      sum += row[f];
      ++count;
    }
    const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
    r.mean_degree.push_back(mean);
    r.stocks.push_back(count);
    (count > 0 && mean >= threshold ? r.basic : r.observed).push_back(names[f]);
  }
  return r;
}

PreliminaryResult preliminary_screen(const std::vector<StockMatrix>& stocks, double threshold,
                                     const PrepOptions& prep) {
  if (stocks.empty()) throw DataError("screening: no stocks");
  const std::vector<std::string>& names = stocks.front().matrix.factor_names;
  const std::set<std::string> reference(names.begin(), names.end());
  for (const auto& s : stocks) {
    const std::set<std::string> own(s.matrix.factor_names.begin(), s.matrix.factor_names.end());
    if (own != reference) throw DataError("screening: factor set of '" + s.id + "' differs from '" + stocks.front().id + "'");
  }

  std::vector<std::vector<double>> degrees;
  std::vector<std::string> skipped;
  for (const auto& s : stocks) {
    try {
      const PreparedStock p = prepare_stock(s.matrix.select(names), prep);
      std::vector<double> row(names.size(), std::numeric_limits<double>::quiet_NaN());
      for (std::size_t k = 0; k < p.factor_names.size(); ++k) {
        const auto at = std::find(names.begin(), names.end(), p.factor_names[k]) - names.begin();
        row[static_cast<std::size_t>(at)] = p.weights.degrees[k];
      }
      degrees.push_back(std::move(row));
    } catch (const DataError& e) {
      skipped.push_back(s.id + ": " + e.what());
    }
  }
  PreliminaryResult r = classify_factors(names, degrees, threshold);
  r.skipped = std::move(skipped);
  return r;
}

void ScreenOptions::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("screen.fraction must lie in (0, 1]");
  if (repeats < 1) throw ConfigError("screen.repeats must be positive");
  if (fail_metrics < 1 || fail_metrics > 4) throw ConfigError("screen.fail_metrics must lie in 1..4");
  if (fail_repeats < 1) throw ConfigError("screen.fail_repeats must be positive");
}

std::string_view verdict_name(ScreenVerdict v) {
  switch (v) {
    case ScreenVerdict::Basic:
      return "basic";
    case ScreenVerdict::Kept:
      return "kept";
    default:
      return "eliminated";
  }
}

namespace {

struct PairOutcome {
  std::optional<EvalReport> classical;
  std::optional<EvalReport> weighted;
  std::string error;
};

ScreeningReport basic_only(const PreliminaryResult& pre, const ScreenOptions& options) {
  ScreeningReport rep;
  rep.threshold = pre.threshold;
  rep.options = options;
  rep.skipped = pre.skipped;
  for (std::size_t f = 0; f < pre.names.size(); ++f) {
    FactorScreening fs;
    fs.name = pre.names[f];
    fs.mean_degree = pre.mean_degree[f];
    fs.degree_stocks = pre.stocks[f];
    fs.observed = std::find(pre.observed.begin(), pre.observed.end(), fs.name) != pre.observed.end();
    fs.verdict = fs.observed ? ScreenVerdict::Kept : ScreenVerdict::Basic;
    rep.factors.push_back(std::move(fs));
  }
  for (const auto& f : rep.factors) rep.selected.push_back(f.name);
  return rep;
}

}  // namespace

ScreeningReport random_screen(const PreliminaryResult& preliminary, const std::vector<StockMatrix>& stocks,
                              const ScreenOptions& options) {
  options.validate();
  if (stocks.size() < options.min_stocks) {
    throw DataError("random screening needs at least " + std::to_string(options.min_stocks) + " stocks, got " +
                    std::to_string(stocks.size()));
  }
  ScreeningReport rep = basic_only(preliminary, options);
  const std::vector<std::string>& observed = preliminary.observed;
  if (observed.empty()) return rep;

  const std::size_t n = stocks.size();
  const auto sample_size =
      std::min(n, static_cast<std::size_t>(std::ceil(options.fraction * static_cast<double>(n) - 1e-9)));
  const auto repeats = static_cast<std::size_t>(options.repeats);
  std::vector<std::vector<std::size_t>> samples;
  for (std::size_t r = 0; r < repeats; ++r) {
    SplitMix64 rng(derive_seed(options.seed, "screening/repeat/" + std::to_string(r)));
    std::vector<std::size_t> order = shuffled_indices(n, rng);
    order.resize(sample_size);
    std::sort(order.begin(), order.end());
    samples.push_back(std::move(order));
  }

  // One job per (candidate, repeat, sampled stock); results land in fixed slots.
  const std::size_t per_factor = repeats * sample_size;
  std::vector<PairOutcome> outcomes(observed.size() * per_factor);
  parallel_for(outcomes.size(), options.workers, [&](std::size_t job) {
    const std::size_t f = job / per_factor;
    const std::size_t r = (job % per_factor) / sample_size;
    const StockMatrix& stock = stocks[samples[r][job % sample_size]];
    PairOutcome& out = outcomes[job];
    try {
      std::vector<std::string> columns = preliminary.basic;
      columns.push_back(observed[f]);
      const PreparedStock p = prepare_stock(stock.matrix.select(columns), options.prep);
      FitOptions fit = options.fit;
      fit.search.workers = 1;
      fit.fold_seed = derive_seed(options.seed, "screening/kfold/" + stock.id);
      out.classical = fit_model(p, ModelKind::Classical, fit).eval;
      out.weighted = fit_model(p, ModelKind::Weighted, fit).eval;
    } catch (const std::exception& e) {
      out.error = stock.id + ": " + e.what();
    }
  });

  const std::size_t half = (sample_size + 1) / 2;
  for (auto& fs : rep.factors) {
    if (!fs.observed) continue;
    const auto f = static_cast<std::size_t>(std::find(observed.begin(), observed.end(), fs.name) - observed.begin());
    int failures = 0;
    for (std::size_t r = 0; r < repeats; ++r) {
      ScreenRepeat rr;
      for (std::size_t s : samples[r]) rr.stocks.push_back(stocks[s].id);
      std::vector<EvalReport> weighted;
      std::vector<EvalReport> classical;
      for (std::size_t s = 0; s < sample_size; ++s) {
        const PairOutcome& o = outcomes[f * per_factor + r * sample_size + s];
        if (!o.error.empty()) {
          rr.error = o.error;
          break;
        }
        weighted.push_back(*o.weighted);
        classical.push_back(*o.classical);
      }
      if (rr.error.empty()) {
        const ComparisonSummary cmp = compare(weighted, classical);
        rr.wins = cmp.wins;
        rr.scc_pairs = cmp.scc_pairs;
        int below = 0;
        for (std::size_t w : {rr.wins.mse, rr.wins.mae, rr.wins.ds, rr.wins.scc}) below += w < half ? 1 : 0;
        rr.failed = below >= options.fail_metrics;
        failures += rr.failed ? 1 : 0;
      }
      fs.repeats.push_back(std::move(rr));
    }
    fs.verdict = failures >= options.fail_repeats ? ScreenVerdict::Eliminated : ScreenVerdict::Kept;
  }

  rep.selected.clear();
  for (const auto& f : rep.factors) {
    if (f.verdict != ScreenVerdict::Eliminated) rep.selected.push_back(f.name);
  }
  return rep;
}

ScreeningReport screen_factors(const std::vector<StockMatrix>& stocks, double threshold,
                               const ScreenOptions& options) {
  const PreliminaryResult pre = preliminary_screen(stocks, threshold, options.prep);
  if (pre.observed.empty()) return basic_only(pre, options);
  if (stocks.size() < options.min_stocks) {
    ScreeningReport rep = basic_only(pre, options);
    rep.note = "random screening skipped: " + std::to_string(stocks.size()) + " stocks, need " +
               std::to_string(options.min_stocks) + "; observed factors kept";
    return rep;
  }
  return random_screen(pre, stocks, options);
}

}  // namespace greysvr
