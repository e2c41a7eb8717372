#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "greysvr/market_data.hpp"

namespace greysvr {

/// Per-date inputs of the three-factor regression behind IVR.
struct FactorReturnsPanel {
  std::vector<Date> dates;
  std::vector<double> r_i;
  std::vector<double> r_m;
  std::vector<double> r_f;
  std::vector<double> hml;
  std::vector<double> smb;

  [[nodiscard]] std::size_t size() const noexcept { return dates.size(); }
};

/// Reads `date,r_i,r_m,r_f,hml,smb`.
FactorReturnsPanel load_factor_panel(const std::filesystem::path& path);
FactorReturnsPanel parse_factor_panel(const std::string& csv_text);

/// An indicator: values exist only on dates with a full window behind them
/// (and, for AR, a non-zero denominator).
struct IndicatorSeries : NamedSeries {
  int window = 0;
};

struct OlsFit {
  Eigen::VectorXd coeffs;
  Eigen::VectorXd residuals;
};

/// Least squares without intercept. Requires rows > cols and a design whose
/// normal matrix has eigenvalue ratio above 1e-10; otherwise throws
/// RankDeficiencyError.
OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

enum class IvrAggregate { MeanAbs, StdDev };

/// X32. For each date with `window` rows behind it (inclusive), regress
/// r_i - r_f on [r_m - r_f, HML, SMB] over that window and aggregate the
/// residuals (mean |e| by default).
IndicatorSeries ivr(const FactorReturnsPanel& panel, int window = 20,
                    IvrAggregate agg = IvrAggregate::MeanAbs);

/// X33. sum(high - open) / sum(open - low) over the trailing window.
IndicatorSeries ar_index(const OhlcvSeries& ohlcv, int window = 26);

/// X34. Open-anchored DTM/DBM balance, in [-1, 1].
IndicatorSeries adtm(const OhlcvSeries& ohlcv, int window = 23);

enum class ObvPrice { Open, Close };

/// X35. Cumulative signed volume, seeded with the first day's volume. The
/// sign compares today's open to yesterday's open (or closes with
/// ObvPrice::Close).
IndicatorSeries obv(const OhlcvSeries& ohlcv, ObvPrice price = ObvPrice::Open);

/// X31. Trailing mean of volume / float_shares.
IndicatorSeries turnover_rate(const OhlcvSeries& ohlcv, int window = 20);

}  // namespace greysvr
