#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elkg/series.hpp"
#include "elkg/time.hpp"

namespace elkg::profiles {

enum class ProfileKind { daily, weekly, monthly };

std::string_view to_string(ProfileKind kind);
std::size_t bucket_count(ProfileKind kind);

/// Average energy per recurring period. daily: 24 local hour-of-day buckets;
/// weekly: 7 ISO weekday buckets (Monday first); monthly: 31 day-of-month
/// buckets. A bucket with zero coverage is absent.
struct LoadProfile {
  ProfileKind kind = ProfileKind::daily;
  std::vector<std::optional<double>> buckets_kwh;
  std::vector<std::size_t> coverage;  // contributing days per bucket
};

struct ProfileConfig {
  /// A local day counts only when this fraction of it is covered by samples.
  double coverage_floor = 0.8;
};

struct EventConfig {
  double on_threshold_w = 5.0;
  double min_duration_s = 60.0;
  double min_gap_s = 30.0;
};

struct Event {
  Millis start;
  Millis end;
  double energy_kwh;
};

struct ConsumptionStats {
  double avg_daily_kwh = 0.0;
  std::optional<double> avg_event_kwh;     // appliances only
  std::optional<std::size_t> event_count;  // appliances only
  std::optional<double> carbon_kg_day;     // absent without an intensity
};

/// Piecewise-constant energy accounting by local hour. Each sample holds its
/// power until the next sample, for at most the declared sampling period.
///
/// Accepts the series in chunks; chunked and whole-series input produce
/// identical results.
class EnergyLedger {
 public:
  EnergyLedger(Zone zone, double sampling_period_s);

  void push(const TimeSeries& chunk);
  /// Flush the final sample. Further pushes are not allowed.
  void finish();

  struct Cell {
    double joules = 0.0;
    Millis covered_ms = 0;
  };
  /// Keyed by local hour index (local milliseconds / 1 h).
  const std::map<std::int64_t, Cell>& hours() const noexcept { return hours_; }

  struct Day {
    std::int64_t local_day;
    double joules;
    Millis covered_ms;
    Millis length_ms;  // 23/24/25 h around DST changes
  };
  std::vector<Day> days() const;

  std::optional<Millis> first() const noexcept { return first_; }
  /// End of the last sample's hold.
  std::optional<Millis> end() const noexcept { return end_; }
  const Zone& zone() const noexcept { return zone_; }

 private:
  void account(Millis from, Millis to, double watts);

  Zone zone_;
  Millis period_ms_;
  std::map<std::int64_t, Cell> hours_;
  std::optional<std::pair<Millis, double>> pending_;
  std::optional<Millis> first_;
  std::optional<Millis> end_;
  bool finished_ = false;
};

/// Days whose coverage reaches the floor.
std::vector<EnergyLedger::Day> qualifying_days(const EnergyLedger& ledger,
                                               const ProfileConfig& cfg);

LoadProfile load_profile(const EnergyLedger& ledger, ProfileKind kind,
                         const ProfileConfig& cfg = {});

/// Throws InsufficientDataError on an empty series.
LoadProfile load_profile(const TimeSeries& series, ProfileKind kind,
                         const Zone& zone, double sampling_period_s,
                         const ProfileConfig& cfg = {});

/// kWh per qualifying local day. Throws InsufficientDataError when the
/// series spans less than one day or no day reaches the coverage floor.
double avg_daily_consumption(const EnergyLedger& ledger, const ProfileConfig& cfg = {});
double avg_daily_consumption(const TimeSeries& series, const Zone& zone,
                             double sampling_period_s, const ProfileConfig& cfg = {});

/// Maximal runs at or above the threshold, merged across gaps shorter than
/// min_gap, kept when at least min_duration long. Energy covers the whole
/// event interval, including merged dips.
std::vector<Event> detect_events(const TimeSeries& series, double sampling_period_s,
                                 const EventConfig& cfg = {});

/// kg CO2 per day; absent when the intensity is unknown.
std::optional<double> carbon_footprint(double avg_daily_kwh,
                                       std::optional<double> intensity_g_per_kwh);

/// Everything computed for one meter or sub-meter.
struct MeterProfiles {
  std::optional<LoadProfile> daily;
  std::optional<LoadProfile> weekly;
  std::optional<LoadProfile> monthly;
  std::optional<ConsumptionStats> stats;
  std::string error;  // why profiles/stats are absent, if they are
};

MeterProfiles compute_meter(const TimeSeries& series, bool is_appliance,
                            const Zone& zone, double sampling_period_s,
                            std::optional<double> intensity_g_per_kwh,
                            const ProfileConfig& pcfg = {}, const EventConfig& ecfg = {});

struct HouseholdProfiles {
  std::string dataset;
  std::string household;
  std::string timezone;
  std::optional<MeterProfiles> aggregate;
  std::map<std::string, MeterProfiles> appliances;
};

nlohmann::json to_json(const LoadProfile& p);
LoadProfile load_profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HouseholdProfiles& h);
HouseholdProfiles household_profiles_from_json(const nlohmann::json& j);

/// CSV matching the load-profile figure axes:
/// `hour,energy_kwh,coverage` / `day_of_week,...` / `day_of_month,...`.
/// Absent buckets leave energy_kwh empty.
std::string plot_csv(const LoadProfile& p);

}  // namespace elkg::profiles
