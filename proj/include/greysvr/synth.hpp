#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "greysvr/market_data.hpp"

namespace greysvr {

/// Seeded synthetic market: per stock, a log-price made of an AR(1)
/// component plus planted functions of a few persistent signal factors, and
/// some distractor factors the price never depends on.
struct SynthOptions {
  std::size_t stocks = 20;
  std::size_t days = 300;
  std::size_t signal_factors = 3;
  std::size_t noise_factors = 2;
  std::uint64_t seed = 42;

  double factor_persistence = 0.97;  ///< AR(1) coefficient of the signal factors
  double noise_persistence = 0.97;   ///< AR(1) coefficient of the distractors
  double price_persistence = 0.9;    ///< AR(1) coefficient of the idiosyncratic log-price part
  double price_noise = 0.01;         ///< innovation sd of that part
  double signal_scale = 0.15;        ///< log-price sensitivity to the planted signal mix
  double relevance_spread = 1.0;     ///< sd of the log relevance of each signal per stock

  void validate() const;
};

/// Signal j (0-based) enters the log-price through a fixed shape:
/// j % 3 == 0 linear, 1 tanh(1.5 x), 2 x|x|/2.
double signal_shape(std::size_t j, double x);

struct SynthStock {
  OhlcvSeries ohlcv;
  ExogenousSeries index;
  std::vector<ExogenousSeries> factors;  ///< S1..Sk then N1..Nl
  std::vector<double> relevance;         ///< planted weight of each signal, sums to 1
  /// Close as target, factor levels as columns, all dates.
  FactorMatrix matrix;
};

std::vector<std::string> synth_factor_names(const SynthOptions& options);

std::vector<SynthStock> generate_universe(const SynthOptions& options);

/// Writes `<id>.csv` (OHLCV with float shares), `index.csv`, one
/// `<id>_<factor>.csv` per factor and a `universe.conf` config fragment that
/// points the pipeline at these files.
void write_universe(const std::filesystem::path& dir, const std::vector<SynthStock>& universe,
                    const SynthOptions& options);

}  // namespace greysvr
