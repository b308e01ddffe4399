#include "elkg/time.hpp"

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include <array>
#include <charconv>
#include <limits>

#include "elkg/error.hpp"

namespace elkg {

// Howard Hinnant's civil-calendar algorithms.
std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
  const std::int64_t y = static_cast<std::int64_t>(year) - (month <= 2 ? 1 : 0);
  const std::int64_t era = floor_div(y, 400);
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = floor_div(z, 146097);
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<int>(y + (m <= 2 ? 1 : 0)), m, d};
}

unsigned weekday_from_days(std::int64_t days) {
  // 1970-01-01 was a Thursday (ISO index 3).
  return static_cast<unsigned>(((days % 7) + 7 + 3) % 7);
}

namespace {

void put2(std::string& out, unsigned v) {
  out.push_back(static_cast<char>('0' + v / 10));
  out.push_back(static_cast<char>('0' + v % 10));
}

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::string format_rfc3339(Millis t) {
  const std::int64_t days = floor_div(t, kMillisPerDay);
  const Millis in_day = t - days * kMillisPerDay;
  const CivilDate date = civil_from_days(days);
  const auto secs = static_cast<unsigned>(in_day / 1000);
  const auto ms = static_cast<unsigned>(in_day % 1000);

  std::string out;
  out.reserve(24);
  std::array<char, 12> buf{};
  int year = date.year;
  if (year < 0) {
    out.push_back('-');
    year = -year;
  }
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), year);
  for (auto n = end - buf.data(); n < 4; ++n) out.push_back('0');
  out.append(buf.data(), end);
  out.push_back('-');
  put2(out, date.month);
  out.push_back('-');
  put2(out, date.day);
  out.push_back('T');
  put2(out, secs / 3600);
  out.push_back(':');
  put2(out, (secs / 60) % 60);
  out.push_back(':');
  put2(out, secs % 60);
  if (ms != 0) {
    out.push_back('.');
    out.push_back(static_cast<char>('0' + ms / 100));
    out.push_back(static_cast<char>('0' + (ms / 10) % 10));
    out.push_back(static_cast<char>('0' + ms % 10));
  }
  out.push_back('Z');
  return out;
}

std::optional<Millis> parse_rfc3339(std::string_view s) {
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!digits(s, 0, 4, year) || s.size() < 19 || s[4] != '-' ||
      !digits(s, 5, 2, month) || s[7] != '-' || !digits(s, 8, 2, day) ||
      (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
      !digits(s, 11, 2, hour) || s[13] != ':' || !digits(s, 14, 2, minute) ||
      s[16] != ':' || !digits(s, 17, 2, second)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 ||
      minute > 59 || second > 60) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  Millis frac = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int scale = 100;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      frac += (s[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
    if (pos == start) return std::nullopt;
  }
  Millis offset = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    const int sign = s[pos] == '-' ? -1 : 1;
    int oh = 0, om = 0;
    if (!digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !digits(s, pos + 4, 2, om)) {
      return std::nullopt;
    }
    offset = sign * (oh * kMillisPerHour + om * 60'000);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                            static_cast<unsigned>(day));
  return days * kMillisPerDay + hour * kMillisPerHour + minute * 60'000 +
         second * 1000 + frac - offset;
}

struct Zone::Impl {
  absl::TimeZone tz;
};

Zone::Zone(const std::string& name) : name_(name) {
  auto impl = std::make_shared<Impl>();
  if (!absl::LoadTimeZone(name, &impl->tz)) {
    throw ConfigError("unknown time zone '" + name + "'");
  }
  impl_ = std::move(impl);
}

Millis Zone::offset_at(Millis t) const {
  if (t >= valid_from_ && t < valid_until_) return cached_offset_;
  const absl::Time at = absl::FromUnixMillis(t);
  const absl::TimeZone::CivilInfo info = impl_->tz.At(at);
  cached_offset_ = static_cast<Millis>(info.offset) * 1000;

  // Transition instants from civil times: `from` is read in the offset in
  // effect before the transition, `to` in the one after it.
  const absl::TimeZone utc = absl::UTCTimeZone();
  absl::TimeZone::CivilTransition trans;
  valid_from_ = std::numeric_limits<Millis>::min();
  valid_until_ = std::numeric_limits<Millis>::max();
  if (impl_->tz.PrevTransition(at + absl::Milliseconds(1), &trans)) {
    valid_from_ = absl::ToUnixMillis(absl::FromCivil(trans.to, utc)) - cached_offset_;
  }
  if (impl_->tz.NextTransition(at, &trans)) {
    valid_until_ = absl::ToUnixMillis(absl::FromCivil(trans.from, utc)) - cached_offset_;
  }
  if (valid_from_ > t) valid_from_ = t;
  if (valid_until_ <= t) valid_until_ = t + 1;
  return cached_offset_;
}

Millis Zone::day_start(std::int64_t local_day) const {
  const CivilDate d = civil_from_days(local_day);
  const absl::CivilSecond cs(d.year, static_cast<int>(d.month),
                             static_cast<int>(d.day));
  const absl::TimeZone::TimeInfo ti = impl_->tz.At(cs);
  // For a skipped midnight, the first valid instant of the day is `trans`.
  const absl::Time t =
      ti.kind == absl::TimeZone::TimeInfo::SKIPPED ? ti.trans : ti.pre;
  return absl::ToUnixMillis(t);
}

std::optional<Millis> Zone::parse_local(std::string_view text,
                                        const std::string& format) const {
  absl::Time t;
  std::string err;
  if (!absl::ParseTime(format, std::string(text), impl_->tz, &t, &err)) return std::nullopt;
  return absl::ToUnixMillis(t);
}

}  // namespace elkg
