#include "greysvr/synth.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "greysvr/error.hpp"
#include "greysvr/random.hpp"

namespace greysvr {

void SynthOptions::validate() const {
  if (stocks == 0) throw std::invalid_argument("synth: need at least one stock");
  if (days < 10) throw std::invalid_argument("synth: need at least 10 days");
  if (signal_factors == 0) throw std::invalid_argument("synth: need at least one signal factor");
  for (double p : {factor_persistence, noise_persistence, price_persistence}) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("synth: persistence must lie in [0, 1)");
  }
  if (!(price_noise >= 0.0) || !(signal_scale >= 0.0) || !(relevance_spread >= 0.0)) {
    throw std::invalid_argument("synth: scales must be non-negative");
  }
}

double signal_shape(std::size_t j, double x) {
  switch (j % 3) {
    case 0:
      return x;
    case 1:
      return std::tanh(1.5 * x);
    default:
      return 0.5 * x * std::abs(x);
  }
}

std::vector<std::string> synth_factor_names(const SynthOptions& o) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < o.signal_factors; ++j) names.push_back("S" + std::to_string(j + 1));
  for (std::size_t j = 0; j < o.noise_factors; ++j) names.push_back("N" + std::to_string(j + 1));
  return names;
}

namespace {

// Weekdays from 2015-01-05 (a Monday).
std::vector<Date> trading_days(std::size_t n) {
  using namespace std::chrono;
  std::vector<Date> out;
  sys_days d = sys_days{year{2015} / January / 5};
  while (out.size() < n) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) out.emplace_back(d);
    d += days{1};
  }
  return out;
}

// Stationary AR(1) with unit marginal variance, started from its stationary law.
std::vector<double> ar1(SplitMix64& rng, std::size_t n, double phi) {
  std::vector<double> x(n);
  const double innov = std::sqrt(1.0 - phi * phi);
  x[0] = rng.normal();
  for (std::size_t t = 1; t < n; ++t) x[t] = phi * x[t - 1] + innov * rng.normal();
  return x;
}

std::string stock_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "SYN%03zu", i + 1);
  return buf;
}

}  // namespace

std::vector<SynthStock> generate_universe(const SynthOptions& o) {
  o.validate();
  const auto dates = trading_days(o.days);
  const auto names = synth_factor_names(o);

  // One market index shared by every stock; unrelated to any price.
  ExogenousSeries index{"X16", dates, {}};
  {
    SplitMix64 rng(derive_seed(o.seed, "index"));
    double level = 3000.0;
    for (std::size_t t = 0; t < o.days; ++t) {
      level *= std::exp(0.0002 + 0.012 * rng.normal());
      index.values.push_back(level);
    }
  }

  std::vector<SynthStock> universe;
  for (std::size_t s = 0; s < o.stocks; ++s) {
    SynthStock st;
    const std::string id = stock_id(s);
    SplitMix64 rng(derive_seed(o.seed, "stock/" + id));

    std::vector<std::vector<double>> factor_paths;
    for (std::size_t j = 0; j < names.size(); ++j) {
      factor_paths.push_back(ar1(rng, o.days, j < o.signal_factors ? o.factor_persistence : o.noise_persistence));
    }

    double total = 0.0;
    for (std::size_t j = 0; j < o.signal_factors; ++j) {
      st.relevance.push_back(std::exp(o.relevance_spread * rng.normal()));
      total += st.relevance.back();
    }
    for (double& r : st.relevance) r /= total;

    const double base = std::log(5.0 + 45.0 * rng.uniform());
    std::vector<double> closes(o.days);
    double idio = 0.0;
    for (std::size_t t = 0; t < o.days; ++t) {
      idio = o.price_persistence * idio + o.price_noise * rng.normal();
      double mix = 0.0;
      for (std::size_t j = 0; j < o.signal_factors; ++j) mix += st.relevance[j] * signal_shape(j, factor_paths[j][t]);
      closes[t] = std::exp(base + o.signal_scale * mix + idio);
    }

    st.ohlcv.instrument_id = id;
    const double float_shares = std::round(2e7 + 8e7 * rng.uniform());
    for (std::size_t t = 0; t < o.days; ++t) {
      OhlcvBar b;
      b.date = dates[t];
      b.close = closes[t];
      b.open = (t == 0 ? closes[0] : closes[t - 1]) * std::exp(0.004 * rng.normal());
      b.high = std::max(b.open, b.close) * (1.0 + 0.006 * std::abs(rng.normal()));
      b.low = std::min(b.open, b.close) * (1.0 - 0.006 * std::abs(rng.normal()));
      b.volume = std::round(1e6 * std::exp(0.3 * rng.normal()));
      b.amount = b.volume * 0.5 * (b.open + b.close);
      b.float_shares = float_shares;
      st.ohlcv.rows.push_back(b);
    }
    st.index = index;

    for (std::size_t j = 0; j < names.size(); ++j) {
      st.factors.push_back({names[j], dates, factor_paths[j]});
    }

    st.matrix.dates = dates;
    st.matrix.factor_names = names;
    st.matrix.values.resize(static_cast<Eigen::Index>(o.days), static_cast<Eigen::Index>(names.size()));
    st.matrix.target.resize(static_cast<Eigen::Index>(o.days));
    for (std::size_t t = 0; t < o.days; ++t) {
      const auto r = static_cast<Eigen::Index>(t);
      st.matrix.target(r) = closes[t];
      for (std::size_t j = 0; j < names.size(); ++j) st.matrix.values(r, static_cast<Eigen::Index>(j)) = factor_paths[j][t];
    }
    universe.push_back(std::move(st));
  }
  return universe;
}

void write_universe(const std::filesystem::path& dir, const std::vector<SynthStock>& universe,
                    const SynthOptions& o) {
  std::filesystem::create_directories(dir);
  if (universe.empty()) return;
  write_exogenous(dir / "index.csv", universe.front().index);
  for (const auto& st : universe) {
    write_ohlcv(dir / (st.ohlcv.instrument_id + ".csv"), st.ohlcv);
    for (const auto& f : st.factors) write_exogenous(dir / (st.ohlcv.instrument_id + "_" + f.name + ".csv"), f);
  }

  std::ofstream conf(dir / "universe.conf");
  if (!conf) throw DataError("cannot write '" + (dir / "universe.conf").string() + "'");
  conf << "# synthetic universe: " << universe.size() << " stocks, " << o.days << " days, seed " << o.seed << "\n";
  conf << "# signal factors S*, noise factors N*\n";
  conf << "seed = " << o.seed << "\n";
  conf << "data.dir = .\n";
  conf << "data.stocks =";
  for (std::size_t i = 0; i < universe.size(); ++i) {
    conf << (i == 0 ? " " : ", ") << universe[i].ohlcv.instrument_id << ".csv";
  }
  conf << "\ndata.index = index.csv\n";
  const auto names = synth_factor_names(o);
  for (const auto& n : names) conf << "data.exo." << n << " = {id}_" << n << ".csv\n";
  conf << "factors =";
  for (std::size_t i = 0; i < names.size(); ++i) conf << (i == 0 ? " " : ", ") << names[i];
  conf << "\n";
}

}  // namespace greysvr
