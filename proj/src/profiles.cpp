#include "elkg/profiles.hpp"

#include <algorithm>
#include <cmath>

#include "elkg/error.hpp"
#include "elkg/text.hpp"

namespace elkg::profiles {

namespace {
constexpr double kJoulesPerKwh = 3.6e6;
}

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::daily: return "daily";
    case ProfileKind::weekly: return "weekly";
    case ProfileKind::monthly: return "monthly";
  }
  return "?";
}

std::size_t bucket_count(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::daily: return 24;
    case ProfileKind::weekly: return 7;
    case ProfileKind::monthly: return 31;
  }
  return 0;
}

EnergyLedger::EnergyLedger(Zone zone, double sampling_period_s)
    : zone_(std::move(zone)),
      period_ms_(std::max<Millis>(1, std::llround(sampling_period_s * 1000.0))) {}

void EnergyLedger::account(Millis from, Millis to, double watts) {
  Millis a = from;
  while (a < to) {
    const Millis off = zone_.offset_at(a);
    const std::int64_t hour = floor_div(a + off, kMillisPerHour);
    Millis boundary = (hour + 1) * kMillisPerHour - off;
    if (boundary <= a) boundary = to;
    const Millis b = std::min(to, boundary);
    Cell& cell = hours_[hour];
    cell.joules += watts * static_cast<double>(b - a) / 1000.0;
    cell.covered_ms += b - a;
    a = b;
  }
}

void EnergyLedger::push(const TimeSeries& chunk) {
  if (finished_) throw Error("EnergyLedger: push after finish");
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    const Millis t = chunk.timestamps[i];
    if (pending_) {
      const auto [pt, pw] = *pending_;
      if (t <= pt) throw Error("EnergyLedger: timestamps must be strictly increasing");
      const Millis hold_end = std::min(t, pt + period_ms_);
      account(pt, hold_end, pw);
      end_ = hold_end;
    } else if (!first_) {
      first_ = t;
    }
    pending_ = {t, chunk.watts[i]};
  }
}

void EnergyLedger::finish() {
  if (finished_) return;
  finished_ = true;
  if (pending_) {
    const auto [pt, pw] = *pending_;
    account(pt, pt + period_ms_, pw);
    end_ = pt + period_ms_;
    pending_.reset();
  }
}

std::vector<EnergyLedger::Day> EnergyLedger::days() const {
  std::vector<Day> out;
  for (const auto& [hour, cell] : hours_) {
    const std::int64_t day = floor_div(hour, 24);
    if (out.empty() || out.back().local_day != day) {
      out.push_back({day, 0.0, 0, zone_.day_start(day + 1) - zone_.day_start(day)});
    }
    out.back().joules += cell.joules;
    out.back().covered_ms += cell.covered_ms;
  }
  return out;
}

std::vector<EnergyLedger::Day> qualifying_days(const EnergyLedger& ledger,
                                               const ProfileConfig& cfg) {
  std::vector<EnergyLedger::Day> out;
  for (const auto& d : ledger.days()) {
    if (static_cast<double>(d.covered_ms) >=
        cfg.coverage_floor * static_cast<double>(d.length_ms)) {
      out.push_back(d);
    }
  }
  return out;
}

LoadProfile load_profile(const EnergyLedger& ledger, ProfileKind kind,
                         const ProfileConfig& cfg) {
  const std::size_t n = bucket_count(kind);
  LoadProfile p;
  p.kind = kind;
  p.buckets_kwh.assign(n, std::nullopt);
  p.coverage.assign(n, 0);
  std::vector<double> sum_j(n, 0.0);

  const auto days = qualifying_days(ledger, cfg);
  if (kind == ProfileKind::daily) {
    const auto& hours = ledger.hours();
    for (const auto& d : days) {
      for (std::size_t h = 0; h < 24; ++h) {
        auto it = hours.find(d.local_day * 24 + static_cast<std::int64_t>(h));
        if (it != hours.end()) sum_j[h] += it->second.joules;
        ++p.coverage[h];
      }
    }
  } else {
    for (const auto& d : days) {
      const std::size_t b = kind == ProfileKind::weekly
                                ? weekday_from_days(d.local_day)
                                : civil_from_days(d.local_day).day - 1;
      sum_j[b] += d.joules;
      ++p.coverage[b];
    }
  }
  for (std::size_t b = 0; b < n; ++b) {
    if (p.coverage[b] > 0) {
      p.buckets_kwh[b] = sum_j[b] / static_cast<double>(p.coverage[b]) / kJoulesPerKwh;
    }
  }
  return p;
}

LoadProfile load_profile(const TimeSeries& series, ProfileKind kind, const Zone& zone,
                         double sampling_period_s, const ProfileConfig& cfg) {
  if (series.empty()) throw InsufficientDataError("load profile of an empty series");
  EnergyLedger ledger(zone, sampling_period_s);
  ledger.push(series);
  ledger.finish();
  return load_profile(ledger, kind, cfg);
}

double avg_daily_consumption(const EnergyLedger& ledger, const ProfileConfig& cfg) {
  if (!ledger.first() || !ledger.end() ||
      *ledger.end() - *ledger.first() < kMillisPerDay) {
    throw InsufficientDataError("series spans less than one day");
  }
  const auto days = qualifying_days(ledger, cfg);
  if (days.empty()) {
    throw InsufficientDataError("no local day reaches the coverage floor");
  }
  double joules = 0.0;
  for (const auto& d : days) joules += d.joules;
  return joules / static_cast<double>(days.size()) / kJoulesPerKwh;
}

double avg_daily_consumption(const TimeSeries& series, const Zone& zone,
                             double sampling_period_s, const ProfileConfig& cfg) {
  EnergyLedger ledger(zone, sampling_period_s);
  ledger.push(series);
  ledger.finish();
  return avg_daily_consumption(ledger, cfg);
}

std::vector<Event> detect_events(const TimeSeries& s, double sampling_period_s,
                                 const EventConfig& cfg) {
  const Millis period = std::max<Millis>(1, std::llround(sampling_period_s * 1000.0));
  const Millis min_gap = std::llround(cfg.min_gap_s * 1000.0);
  const Millis min_duration = std::llround(cfg.min_duration_s * 1000.0);
  const std::size_t n = s.size();
  auto hold_end = [&](std::size_t i) {
    const Millis cap = s.timestamps[i] + period;
    return i + 1 < n ? std::min(cap, s.timestamps[i + 1]) : cap;
  };

  struct Run {
    Millis start, end;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(s.watts[i] >= cfg.on_threshold_w)) continue;
    const Millis a = s.timestamps[i];
    const Millis b = hold_end(i);
    if (!runs.empty() && a - runs.back().end < min_gap) {
      runs.back().end = b;
    } else {
      runs.push_back({a, b});
    }
  }
  std::erase_if(runs, [&](const Run& r) { return r.end - r.start < min_duration; });

  std::vector<Event> events;
  events.reserve(runs.size());
  std::size_t i = 0;
  for (const Run& r : runs) {
    while (i < n && hold_end(i) <= r.start) ++i;
    double joules = 0.0;
    for (std::size_t k = i; k < n && s.timestamps[k] < r.end; ++k) {
      const Millis a = std::max(s.timestamps[k], r.start);
      const Millis b = std::min(hold_end(k), r.end);
      if (b > a) joules += s.watts[k] * static_cast<double>(b - a) / 1000.0;
    }
    events.push_back({r.start, r.end, joules / kJoulesPerKwh});
  }
  return events;
}

std::optional<double> carbon_footprint(double avg_daily_kwh,
                                       std::optional<double> intensity_g_per_kwh) {
  if (!intensity_g_per_kwh) return std::nullopt;
  if (avg_daily_kwh < 0.0 || *intensity_g_per_kwh < 0.0) {
    throw Error("carbon footprint inputs must be non-negative");
  }
  return avg_daily_kwh * *intensity_g_per_kwh / 1000.0;
}

MeterProfiles compute_meter(const TimeSeries& series, bool is_appliance,
                            const Zone& zone, double sampling_period_s,
                            std::optional<double> intensity,
                            const ProfileConfig& pcfg, const EventConfig& ecfg) {
  MeterProfiles m;
  if (series.empty()) {
    m.error = "empty series";
    return m;
  }
  EnergyLedger ledger(zone, sampling_period_s);
  ledger.push(series);
  ledger.finish();
  m.daily = load_profile(ledger, ProfileKind::daily, pcfg);
  m.weekly = load_profile(ledger, ProfileKind::weekly, pcfg);
  m.monthly = load_profile(ledger, ProfileKind::monthly, pcfg);
  try {
    ConsumptionStats st;
    st.avg_daily_kwh = avg_daily_consumption(ledger, pcfg);
    if (is_appliance) {
      const auto events = detect_events(series, sampling_period_s, ecfg);
      st.event_count = events.size();
      if (!events.empty()) {
        double total = 0.0;
        for (const auto& e : events) total += e.energy_kwh;
        st.avg_event_kwh = total / static_cast<double>(events.size());
      }
    }
    st.carbon_kg_day = carbon_footprint(st.avg_daily_kwh, intensity);
    m.stats = st;
  } catch (const InsufficientDataError& e) {
    m.error = e.what();
  }
  return m;
}

// ---------------------------------------------------------------------------
// JSON / CSV

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

ProfileKind kind_from(const std::string& s) {
  if (s == "daily") return ProfileKind::daily;
  if (s == "weekly") return ProfileKind::weekly;
  if (s == "monthly") return ProfileKind::monthly;
  throw FormatError("profile", "unknown profile kind '" + s + "'");
}

json meter_json(const MeterProfiles& m) {
  json j = json::object();
  if (m.daily) j["daily"] = to_json(*m.daily);
  if (m.weekly) j["weekly"] = to_json(*m.weekly);
  if (m.monthly) j["monthly"] = to_json(*m.monthly);
  if (m.stats) {
    json s;
    s["avg_daily_kwh"] = m.stats->avg_daily_kwh;
    s["avg_event_kwh"] = opt(m.stats->avg_event_kwh);
    s["event_count"] = m.stats->event_count ? json(*m.stats->event_count) : json(nullptr);
    s["carbon_kg_day"] = opt(m.stats->carbon_kg_day);
    j["stats"] = s;
  }
  if (!m.error.empty()) j["error"] = m.error;
  return j;
}

std::optional<double> opt_double(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

MeterProfiles meter_from(const json& j) {
  MeterProfiles m;
  if (j.contains("daily")) m.daily = load_profile_from_json(j["daily"]);
  if (j.contains("weekly")) m.weekly = load_profile_from_json(j["weekly"]);
  if (j.contains("monthly")) m.monthly = load_profile_from_json(j["monthly"]);
  if (j.contains("stats")) {
    const json& s = j["stats"];
    ConsumptionStats st;
    st.avg_daily_kwh = s.at("avg_daily_kwh").get<double>();
    st.avg_event_kwh = opt_double(s, "avg_event_kwh");
    if (s.contains("event_count") && !s["event_count"].is_null()) {
      st.event_count = s["event_count"].get<std::size_t>();
    }
    st.carbon_kg_day = opt_double(s, "carbon_kg_day");
    m.stats = st;
  }
  m.error = j.value("error", "");
  return m;
}

}  // namespace

json to_json(const LoadProfile& p) {
  json buckets = json::array();
  for (const auto& b : p.buckets_kwh) buckets.push_back(opt(b));
  return {{"kind", to_string(p.kind)}, {"unit", "kWh"}, {"buckets", buckets},
          {"coverage", p.coverage}};
}

LoadProfile load_profile_from_json(const json& j) {
  LoadProfile p;
  p.kind = kind_from(j.at("kind").get<std::string>());
  for (const auto& b : j.at("buckets")) {
    p.buckets_kwh.push_back(b.is_null() ? std::nullopt : std::optional<double>(b.get<double>()));
  }
  p.coverage = j.at("coverage").get<std::vector<std::size_t>>();
  if (p.buckets_kwh.size() != bucket_count(p.kind) || p.coverage.size() != p.buckets_kwh.size()) {
    throw FormatError("profile", "bucket count does not match kind");
  }
  return p;
}

json to_json(const HouseholdProfiles& h) {
  json j;
  j["dataset"] = h.dataset;
  j["household"] = h.household;
  j["timezone"] = h.timezone;
  j["aggregate"] = h.aggregate ? meter_json(*h.aggregate) : json(nullptr);
  json apps = json::object();
  for (const auto& [name, m] : h.appliances) apps[name] = meter_json(m);
  j["appliances"] = apps;
  return j;
}

HouseholdProfiles household_profiles_from_json(const json& j) {
  HouseholdProfiles h;
  try {
    h.dataset = j.at("dataset").get<std::string>();
    h.household = j.at("household").get<std::string>();
    h.timezone = j.at("timezone").get<std::string>();
    if (!j.at("aggregate").is_null()) h.aggregate = meter_from(j["aggregate"]);
    for (const auto& [name, m] : j.at("appliances").items()) h.appliances[name] = meter_from(m);
  } catch (const json::exception& e) {
    throw FormatError("profiles document", e.what());
  }
  return h;
}

std::string plot_csv(const LoadProfile& p) {
  std::string out;
  switch (p.kind) {
    case ProfileKind::daily: out = "hour"; break;
    case ProfileKind::weekly: out = "day_of_week"; break;
    case ProfileKind::monthly: out = "day_of_month"; break;
  }
  out += ",energy_kwh,coverage\n";
  static const char* kWeekdays[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
  for (std::size_t b = 0; b < p.buckets_kwh.size(); ++b) {
    switch (p.kind) {
      case ProfileKind::daily: out += std::to_string(b); break;
      case ProfileKind::weekly: out += kWeekdays[b]; break;
      case ProfileKind::monthly: out += std::to_string(b + 1); break;
    }
    out.push_back(',');
    if (p.buckets_kwh[b]) out += format_decimal(*p.buckets_kwh[b]);
    out.push_back(',');
    out += std::to_string(p.coverage[b]);
    out.push_back('\n');
  }
  return out;
}

}  // namespace elkg::profiles
