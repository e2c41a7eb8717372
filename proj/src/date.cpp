#include "greysvr/date.hpp"

#include <charconv>
#include <cstdio>

#include "greysvr/error.hpp"

namespace greysvr {

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  const char* first = text.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw DataError("invalid date '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DataError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const int y = parse_digits(text, 0, 4);
  const int m = parse_digits(text, 5, 2);
  const int d = parse_digits(text, 8, 2);
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) {
    throw DataError("invalid calendar date '" + std::string(text) + "'");
  }
  return date;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

}  // namespace greysvr
