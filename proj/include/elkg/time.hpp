#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace elkg {

/// Milliseconds since the Unix epoch, UTC. The single instant representation
/// used across the toolkit.
using Millis = std::int64_t;

inline constexpr Millis kMillisPerSecond = 1000;
inline constexpr Millis kMillisPerHour = 3'600'000;
inline constexpr Millis kMillisPerDay = 86'400'000;

/// floor(a / b) for b > 0.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && a < 0) ? q - 1 : q;
}

struct CivilDate {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
  friend bool operator==(const CivilDate&, const CivilDate&) = default;
};

/// Proleptic Gregorian conversions between day numbers (days since
/// 1970-01-01) and civil dates.
std::int64_t days_from_civil(int year, unsigned month, unsigned day);
CivilDate civil_from_days(std::int64_t days);

/// ISO weekday index of a day number: Monday = 0 ... Sunday = 6.
unsigned weekday_from_days(std::int64_t days);

/// `YYYY-MM-DDTHH:MM:SS[.fff]Z`; the fraction is written only when non-zero.
std::string format_rfc3339(Millis t);

/// Accepts `YYYY-MM-DDTHH:MM:SS[.f+](Z|±HH:MM)` (also a space separator).
/// Fractions beyond milliseconds are truncated.
std::optional<Millis> parse_rfc3339(std::string_view text);

/// An IANA time zone with cached UTC-offset lookups. Copies share the
/// loaded zone data; the cache is per instance, so give each thread its own.
class Zone {
 public:
  /// Throws ConfigError for unknown zone names.
  explicit Zone(const std::string& name);
  static Zone utc() { return Zone("UTC"); }

  const std::string& name() const noexcept { return name_; }

  /// Offset (local - UTC) in milliseconds in effect at `t`.
  Millis offset_at(Millis t) const;

  Millis to_local(Millis t) const { return t + offset_at(t); }

  /// UTC instant at which the local civil day `local_day` (days since
  /// 1970-01-01 in local time) begins.
  Millis day_start(std::int64_t local_day) const;

  /// Parse a local civil timestamp with a strftime-style format and return
  /// the UTC instant. Nonexistent local times resolve forward.
  std::optional<Millis> parse_local(std::string_view text,
                                    const std::string& format) const;

 private:
  struct Impl;
  std::string name_;
  std::shared_ptr<const Impl> impl_;
  // [valid_from, valid_until) range for cached_offset_.
  mutable Millis valid_from_ = 1;
  mutable Millis valid_until_ = 0;
  mutable Millis cached_offset_ = 0;
};

}  // namespace elkg
