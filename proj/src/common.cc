#include "transit_access/common.h"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace transit_access {

InputError::InputError(std::string file, std::size_t line, std::string field,
                       const std::string& what)
    : std::runtime_error(fmt::format("{}:{}: field '{}': {}", file, line,
                                     field, what)),
      file_(std::move(file)),
      line_(line),
      field_(std::move(field)) {}

InputError::InputError(const std::string& what) : std::runtime_error(what) {}

namespace {

bool read_digits(std::string_view s, std::size_t& pos, std::size_t min_len,
                 std::size_t max_len, int& out) {
  std::size_t start = pos;
  int value = 0;
  while (pos < s.size() && pos - start < max_len && s[pos] >= '0' &&
         s[pos] <= '9') {
    value = value * 10 + (s[pos] - '0');
    ++pos;
  }
  if (pos - start < min_len) return false;
  out = value;
  return true;
}

}  // namespace

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<Seconds> parse_hms(std::string_view text) {
  text = trim(text);
  std::size_t pos = 0;
  int h = 0, m = 0, s = 0;
  if (!read_digits(text, pos, 1, 3, h)) return std::nullopt;
  if (pos >= text.size() || text[pos] != ':') return std::nullopt;
  ++pos;
  if (!read_digits(text, pos, 2, 2, m)) return std::nullopt;
  if (pos >= text.size() || text[pos] != ':') return std::nullopt;
  ++pos;
  if (!read_digits(text, pos, 2, 2, s)) return std::nullopt;
  if (pos != text.size() || m > 59 || s > 59) return std::nullopt;
  return static_cast<Seconds>(h * 3600 + m * 60 + s);
}

std::string format_hms(Seconds s) {
  const char* sign = s < 0 ? "-" : "";
  if (s < 0) s = -s;
  return fmt::format("{}{:02}:{:02}:{:02}", sign, s / 3600, (s / 60) % 60,
                     s % 60);
}

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  std::size_t pos = 0;
  int y = 0, m = 0, d = 0;
  if (!read_digits(text, pos, 4, 4, y)) return std::nullopt;
  bool dashed = pos < text.size() && text[pos] == '-';
  if (dashed) ++pos;
  if (!read_digits(text, pos, 2, 2, m)) return std::nullopt;
  if (dashed) {
    if (pos >= text.size() || text[pos] != '-') return std::nullopt;
    ++pos;
  }
  if (!read_digits(text, pos, 2, 2, d)) return std::nullopt;
  if (pos != text.size()) return std::nullopt;
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(Date d) {
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()),
                     static_cast<unsigned>(d.day()));
}

std::string format_gtfs_date(Date d) {
  return fmt::format("{:04}{:02}{:02}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()),
                     static_cast<unsigned>(d.day()));
}

int weekday_index(Date d) {
  std::chrono::weekday wd{std::chrono::sys_days{d}};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

std::optional<LocalDateTime> parse_local_datetime(std::string_view text) {
  text = trim(text);
  auto sep = text.find_first_of("T ");
  if (sep == std::string_view::npos) return std::nullopt;
  auto date = parse_date(text.substr(0, sep));
  auto time = parse_hms(text.substr(sep + 1));
  if (!date || !time) return std::nullopt;
  return LocalDateTime{*date, *time};
}

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() ||
      !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::optional<long long> parse_int(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return v;
}

}  // namespace transit_access
