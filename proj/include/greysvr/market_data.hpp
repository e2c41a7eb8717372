#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "greysvr/date.hpp"

namespace greysvr {

struct OhlcvBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
  double amount = 0.0;
  std::optional<double> float_shares;

  /// Zero traded volume marks a suspension day.
  [[nodiscard]] bool suspended() const noexcept { return volume == 0.0; }
};

/// Dated per-instrument bars. Rows are strictly increasing in date and every
/// row satisfies low <= min(open, close), high >= max(open, close).
struct OhlcvSeries {
  std::string instrument_id;
  std::vector<OhlcvBar> rows;

  [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
  [[nodiscard]] bool empty() const noexcept { return rows.empty(); }
  [[nodiscard]] bool has_float_shares() const noexcept;
  [[nodiscard]] std::vector<Date> dates() const;
  [[nodiscard]] std::vector<double> closes() const;
};

/// A named, dated real series. Used for exogenous inputs (index level, weather
/// columns) and for every derived factor and indicator; dates on which a value
/// is undefined are simply absent.
struct NamedSeries {
  std::string name;
  std::vector<Date> dates;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const noexcept { return dates.size(); }
};

using ExogenousSeries = NamedSeries;

/// The regression dataset: one row per aligned date, one column per factor,
/// plus the close price as target.
struct FactorMatrix {
  std::vector<Date> dates;
  std::vector<std::string> factor_names;
  Eigen::MatrixXd values;  // dates x factors
  Eigen::VectorXd target;

  [[nodiscard]] std::size_t rows() const noexcept { return dates.size(); }
  [[nodiscard]] std::size_t cols() const noexcept { return factor_names.size(); }
  [[nodiscard]] std::optional<std::size_t> column_index(const std::string& name) const;

  /// Keeps only the named columns, in the order given. Throws DataError on an
  /// unknown name.
  [[nodiscard]] FactorMatrix select(const std::vector<std::string>& names) const;
};

/// Reads `date,open,high,low,close,volume,amount[,float_shares]`. Rows are
/// returned sorted by date; duplicate dates, parse failures and OHLC invariant
/// violations throw DataError naming the 1-based data row.
OhlcvSeries load_ohlcv(const std::filesystem::path& path);
OhlcvSeries parse_ohlcv(const std::string& csv_text, std::string instrument_id);

/// Reads `date,value`.
ExogenousSeries load_exogenous(const std::filesystem::path& path, std::string name);
ExogenousSeries parse_exogenous(const std::string& csv_text, std::string name);

void write_ohlcv(const std::filesystem::path& path, const OhlcvSeries& s);
void write_exogenous(const std::filesystem::path& path, const ExogenousSeries& s);

OhlcvSeries drop_suspensions(const OhlcvSeries& s);

/// X11..X16: high, low, volume, amount, previous close, index level. X15 has
/// no value on the first date; X16 is defined only where the index has a row.
std::vector<NamedSeries> build_technical_factors(const OhlcvSeries& ohlcv,
                                                 const ExogenousSeries& index);

/// Shifts a series one step along its own date axis: the value observed on
/// dates[i-1] is reported on dates[i]. The first date is dropped.
NamedSeries lag_one(const NamedSeries& s);

/// Intersects all date sets. Columns are `derived` in order, then `exo` in
/// order; the target is the close. Throws DataError when the intersection is
/// empty.
FactorMatrix align(const OhlcvSeries& ohlcv, const std::vector<ExogenousSeries>& exo,
                   const std::vector<NamedSeries>& derived);

}  // namespace greysvr
