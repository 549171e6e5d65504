#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace transit_access {

// Seconds since service-day midnight. Values past 24:00:00 are kept as-is.
using Seconds = std::int32_t;

using Date = std::chrono::year_month_day;

// Raised for malformed or inconsistent input files. Maps to exit code 2.
class InputError : public std::runtime_error {
 public:
  InputError(std::string file, std::size_t line, std::string field,
             const std::string& what);
  explicit InputError(const std::string& what);

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
  std::string field_;
};

// Raised for invalid study configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Warnings collected while loading and processing inputs.
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

// "HH:MM:SS" with hours allowed past 23. Returns nullopt on malformed input.
std::optional<Seconds> parse_hms(std::string_view text);
std::string format_hms(Seconds s);

// Accepts "YYYY-MM-DD" and GTFS "YYYYMMDD".
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);
std::string format_gtfs_date(Date d);

// 0 = Monday ... 6 = Sunday.
int weekday_index(Date d);

struct LocalDateTime {
  Date date;
  Seconds time_of_day;
};

// "YYYY-MM-DDTHH:MM:SS" (a space separator is accepted too).
std::optional<LocalDateTime> parse_local_datetime(std::string_view text);

// Shortest decimal form that reads back to the same double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace transit_access
