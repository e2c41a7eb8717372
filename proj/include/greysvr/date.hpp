#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace greysvr {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date `YYYY-MM-DD`. Throws DataError.
Date parse_date(std::string_view text);

std::string format_date(const Date& d);

}  // namespace greysvr
