#include "greysvr/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "csv.hpp"
#include "greysvr/error.hpp"

namespace greysvr {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

namespace {

using detail::lines;
using detail::split;

std::string row_label(std::size_t row) { return "row " + std::to_string(row); }

double field(std::string_view text, std::size_t row, const char* column) {
  double v = 0.0;
  if (!detail::parse_double(text, v) || !std::isfinite(v)) {
    throw DataError(row_label(row) + ": cannot parse " + column + " '" + std::string(text) + "'");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

}  // namespace

bool OhlcvSeries::has_float_shares() const noexcept {
  return !rows.empty() &&
         std::all_of(rows.begin(), rows.end(), [](const OhlcvBar& b) { return b.float_shares.has_value(); });
}

std::vector<Date> OhlcvSeries::dates() const {
  std::vector<Date> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.date);
  return out;
}

std::vector<double> OhlcvSeries::closes() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.close);
  return out;
}

std::optional<std::size_t> FactorMatrix::column_index(const std::string& name) const {
  auto it = std::find(factor_names.begin(), factor_names.end(), name);
  if (it == factor_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - factor_names.begin());
}

FactorMatrix FactorMatrix::select(const std::vector<std::string>& names) const {
  FactorMatrix out;
  out.dates = dates;
  out.target = target;
  out.factor_names = names;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto idx = column_index(names[j]);
    if (!idx) throw DataError("unknown factor column '" + names[j] + "'");
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(*idx));
  }
  return out;
}

OhlcvSeries parse_ohlcv(const std::string& csv_text, std::string instrument_id) {
  const auto all = lines(csv_text);
  std::size_t i = 0;
  while (i < all.size() && all[i].empty()) ++i;
  if (i == all.size()) throw DataError(instrument_id + ": empty OHLCV file");

  const auto header = split(all[i]);
  static const std::vector<std::string_view> required{"date", "open", "high", "low",
                                                      "close", "volume", "amount"};
  bool with_float = false;
  if (header.size() == required.size() + 1 && header.back() == "float_shares") {
    with_float = true;
  } else if (header.size() != required.size()) {
    throw DataError(instrument_id + ": unexpected OHLCV header");
  }
  for (std::size_t c = 0; c < required.size(); ++c) {
    if (header[c] != required[c]) {
      throw DataError(instrument_id + ": unexpected OHLCV header column '" + std::string(header[c]) + "'");
    }
  }

  OhlcvSeries s;
  s.instrument_id = std::move(instrument_id);
  std::size_t row = 0;
  for (++i; i < all.size(); ++i) {
    if (all[i].empty()) continue;
    ++row;
    const auto f = split(all[i]);
    if (f.size() != header.size()) {
      throw DataError(row_label(row) + ": expected " + std::to_string(header.size()) + " fields");
    }
    OhlcvBar b;
    try {
      b.date = parse_date(f[0]);
    } catch (const DataError& e) {
      throw DataError(row_label(row) + ": " + e.what());
    }
    b.open = field(f[1], row, "open");
    b.high = field(f[2], row, "high");
    b.low = field(f[3], row, "low");
    b.close = field(f[4], row, "close");
    b.volume = field(f[5], row, "volume");
    b.amount = field(f[6], row, "amount");
    if (with_float && !f[7].empty()) b.float_shares = field(f[7], row, "float_shares");

    if (b.high < b.low || b.high < std::max(b.open, b.close) || b.low > std::min(b.open, b.close)) {
      throw DataError(row_label(row) + ": OHLC invariant violated (low <= open,close <= high)");
    }
    if (b.volume < 0.0 || b.amount < 0.0) {
      throw DataError(row_label(row) + ": negative volume or amount");
    }
    s.rows.push_back(b);
  }

  std::stable_sort(s.rows.begin(), s.rows.end(),
                   [](const OhlcvBar& a, const OhlcvBar& b) { return a.date < b.date; });
  for (std::size_t r = 1; r < s.rows.size(); ++r) {
    if (s.rows[r].date == s.rows[r - 1].date) {
      throw DataError(s.instrument_id + ": duplicate date " + format_date(s.rows[r].date));
    }
  }
  return s;
}

OhlcvSeries load_ohlcv(const std::filesystem::path& path) {
  try {
    return parse_ohlcv(detail::read_file(path.string()), path.stem().string());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ExogenousSeries parse_exogenous(const std::string& csv_text, std::string name) {
  const auto all = lines(csv_text);
  std::size_t i = 0;
  while (i < all.size() && all[i].empty()) ++i;
  if (i == all.size()) throw DataError(name + ": empty series file");
  const auto header = split(all[i]);
  if (header.size() != 2 || header[0] != "date" || header[1] != "value") {
    throw DataError(name + ": expected header 'date,value'");
  }

  std::vector<std::pair<Date, double>> rows;
  std::size_t row = 0;
  for (++i; i < all.size(); ++i) {
    if (all[i].empty()) continue;
    ++row;
    const auto f = split(all[i]);
    if (f.size() != 2) throw DataError(row_label(row) + ": expected 2 fields");
    Date d;
    try {
      d = parse_date(f[0]);
    } catch (const DataError& e) {
      throw DataError(row_label(row) + ": " + e.what());
    }
    rows.emplace_back(d, field(f[1], row, "value"));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  ExogenousSeries s;
  s.name = std::move(name);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (r > 0 && rows[r].first == rows[r - 1].first) {
      throw DataError(s.name + ": duplicate date " + format_date(rows[r].first));
    }
    s.dates.push_back(rows[r].first);
    s.values.push_back(rows[r].second);
  }
  return s;
}

ExogenousSeries load_exogenous(const std::filesystem::path& path, std::string name) {
  try {
    return parse_exogenous(detail::read_file(path.string()), std::move(name));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_ohlcv(const std::filesystem::path& path, const OhlcvSeries& s) {
  auto out = open_out(path);
  const bool with_float = s.has_float_shares();
  out << "date,open,high,low,close,volume,amount" << (with_float ? ",float_shares" : "") << '\n';
  for (const auto& r : s.rows) {
    out << format_date(r.date) << ',' << r.open << ',' << r.high << ',' << r.low << ',' << r.close
        << ',' << r.volume << ',' << r.amount;
    if (with_float) out << ',' << *r.float_shares;
    out << '\n';
  }
}

void write_exogenous(const std::filesystem::path& path, const ExogenousSeries& s) {
  auto out = open_out(path);
  out << "date,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) out << format_date(s.dates[i]) << ',' << s.values[i] << '\n';
}

OhlcvSeries drop_suspensions(const OhlcvSeries& s) {
  OhlcvSeries out;
  out.instrument_id = s.instrument_id;
  std::copy_if(s.rows.begin(), s.rows.end(), std::back_inserter(out.rows),
               [](const OhlcvBar& b) { return !b.suspended(); });
  return out;
}

std::vector<NamedSeries> build_technical_factors(const OhlcvSeries& ohlcv, const ExogenousSeries& index) {
  if (ohlcv.size() < 2) {
    throw DataError(ohlcv.instrument_id + ": technical factors need at least 2 rows");
  }
  NamedSeries high{"X11", {}, {}}, low{"X12", {}, {}}, vol{"X13", {}, {}}, amt{"X14", {}, {}},
      prev{"X15", {}, {}};
  for (std::size_t i = 0; i < ohlcv.size(); ++i) {
    const auto& r = ohlcv.rows[i];
    for (auto* s : {&high, &low, &vol, &amt}) s->dates.push_back(r.date);
    high.values.push_back(r.high);
    low.values.push_back(r.low);
    vol.values.push_back(r.volume);
    amt.values.push_back(r.amount);
    if (i > 0) {
      prev.dates.push_back(r.date);
      prev.values.push_back(ohlcv.rows[i - 1].close);
    }
  }
  NamedSeries idx{"X16", index.dates, index.values};
  return {high, low, vol, amt, prev, idx};
}

NamedSeries lag_one(const NamedSeries& s) {
  NamedSeries out;
  out.name = s.name;
  for (std::size_t i = 1; i < s.size(); ++i) {
    out.dates.push_back(s.dates[i]);
    out.values.push_back(s.values[i - 1]);
  }
  return out;
}

FactorMatrix align(const OhlcvSeries& ohlcv, const std::vector<ExogenousSeries>& exo,
                   const std::vector<NamedSeries>& derived) {
  std::vector<const NamedSeries*> columns;
  for (const auto& d : derived) columns.push_back(&d);
  for (const auto& e : exo) columns.push_back(&e);

  // Per column lookup of date -> value; the target comes from the OHLCV rows.
  std::vector<std::map<Date, double>> lookup(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto* s = columns[c];
    if (s->dates.size() != s->values.size()) {
      throw DataError("series '" + s->name + "' has mismatched dates and values");
    }
    for (std::size_t i = 0; i < s->size(); ++i) lookup[c].emplace(s->dates[i], s->values[i]);
  }

  FactorMatrix m;
  for (const auto* s : columns) m.factor_names.push_back(s->name);
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < ohlcv.size(); ++r) {
    const Date d = ohlcv.rows[r].date;
    bool present = true;
    for (const auto& l : lookup) {
      if (!l.contains(d)) {
        present = false;
        break;
      }
    }
    if (present) kept.push_back(r);
  }
  if (kept.empty()) {
    throw DataError(ohlcv.instrument_id + ": no common dates across inputs");
  }

  const auto n = static_cast<Eigen::Index>(kept.size());
  m.values.resize(n, static_cast<Eigen::Index>(columns.size()));
  m.target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& bar = ohlcv.rows[kept[static_cast<std::size_t>(i)]];
    m.dates.push_back(bar.date);
    m.target(i) = bar.close;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      m.values(i, static_cast<Eigen::Index>(c)) = lookup[c].at(bar.date);
    }
  }
  return m;
}

}  // namespace greysvr
