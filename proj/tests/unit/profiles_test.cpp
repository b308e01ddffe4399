#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "elkg/error.hpp"
#include "elkg/profiles.hpp"
#include "support.hpp"

namespace p = elkg::profiles;
using elkg::Millis;

namespace {

constexpr Millis kDay = elkg::kMillisPerDay;
const Millis kT0 = elkg::days_from_civil(2023, 5, 1) * kDay;

elkg::TimeSeries constant(Millis start, Millis end, Millis step, double w) {
  elkg::TimeSeries s;
  for (Millis t = start; t < end; t += step) s.push_back(t, w);
  return s;
}

// Random whole-second series over a few days with gaps and varying steps.
elkg::TimeSeries random_series(std::mt19937_64& rng, Millis& period_ms) {
  period_ms = std::uniform_int_distribution<Millis>(1, 120)(rng) * 1000;
  std::uniform_real_distribution<double> w(0.0, 4000.0);
  std::bernoulli_distribution gap(0.002);
  elkg::TimeSeries s;
  Millis t = kT0 + std::uniform_int_distribution<Millis>(0, 86400)(rng) * 1000;
  const Millis end = t + std::uniform_int_distribution<Millis>(2, 4)(rng) * kDay;
  while (t < end) {
    s.push_back(t, w(rng));
    Millis step = period_ms;
    if (gap(rng)) step += std::uniform_int_distribution<Millis>(1, 7200)(rng) * 1000;
    t += step;
  }
  return s;
}

void expect_buckets_near(const std::vector<std::optional<double>>& got,
                         const std::vector<std::optional<double>>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    ASSERT_EQ(got[i].has_value(), want[i].has_value()) << i;
    if (got[i]) { EXPECT_NEAR(*got[i], *want[i], tol) << i; }
  }
}

}  // namespace

TEST(Profiles, ConstantKilowattGivesOneKwhPerHour) {
  const elkg::Zone utc = elkg::Zone::utc();
  const auto s = constant(kT0, kT0 + 7 * kDay, 1000, 1000.0);
  const auto daily = p::load_profile(s, p::ProfileKind::daily, utc, 1.0);
  for (const auto& b : daily.buckets_kwh) {
    ASSERT_TRUE(b);
    EXPECT_NEAR(*b, 1.0, 1e-12);
  }
  EXPECT_NEAR(p::avg_daily_consumption(s, utc, 1.0), 24.0, 1e-9);
  const auto weekly = p::load_profile(s, p::ProfileKind::weekly, utc, 1.0);
  for (const auto& b : weekly.buckets_kwh) EXPECT_NEAR(b.value(), 24.0, 1e-9);
}

TEST(Profiles, DstDayHasTwentyThreeHours) {
  const elkg::Zone london("Europe/London");
  const Millis start = elkg::days_from_civil(2023, 3, 25) * kDay;
  const auto s = constant(start, start + 3 * kDay, 60000, 1000.0);
  p::EnergyLedger ledger(london, 60);
  ledger.push(s);
  ledger.finish();
  bool saw_short = false;
  for (const auto& d : ledger.days()) {
    if (d.length_ms == 23 * elkg::kMillisPerHour) {
      saw_short = true;
      EXPECT_NEAR(d.joules / 3.6e6, 23.0, 1e-9);
    }
  }
  EXPECT_TRUE(saw_short);
}

TEST(Profiles, MatchesOracleOnRandomSeries) {
  std::mt19937_64 rng(77);
  const elkg::Zone kolkata("Asia/Kolkata");  // fixed +05:30
  const Millis offset = (5 * 60 + 30) * 60000;
  for (int rep = 0; rep < 100; ++rep) {
    Millis period = 0;
    const auto s = random_series(rng, period);
    const auto want = elkg::test::oracle_profiles(s, offset, period, 0.8);
    p::ProfileConfig cfg;
    const double ps = static_cast<double>(period) / 1000.0;
    expect_buckets_near(p::load_profile(s, p::ProfileKind::daily, kolkata, ps, cfg).buckets_kwh,
                        want.daily, 1e-6);
    expect_buckets_near(p::load_profile(s, p::ProfileKind::weekly, kolkata, ps, cfg).buckets_kwh,
                        want.weekly, 1e-6);
    expect_buckets_near(p::load_profile(s, p::ProfileKind::monthly, kolkata, ps, cfg).buckets_kwh,
                        want.monthly, 1e-6);
    if (want.avg_daily) {
      EXPECT_NEAR(p::avg_daily_consumption(s, kolkata, ps, cfg), *want.avg_daily, 1e-6);
    } else {
      EXPECT_THROW(p::avg_daily_consumption(s, kolkata, ps, cfg), elkg::InsufficientDataError);
    }
  }
}

TEST(Profiles, DailyBucketsSumToAverageDaily) {
  std::mt19937_64 rng(8);
  const elkg::Zone berlin("Europe/Berlin");
  for (int rep = 0; rep < 50; ++rep) {
    Millis period = 0;
    const auto s = random_series(rng, period);
    const double ps = static_cast<double>(period) / 1000.0;
    const auto daily = p::load_profile(s, p::ProfileKind::daily, berlin, ps);
    double sum = 0;
    bool complete = true;
    for (const auto& b : daily.buckets_kwh) {
      if (!b) complete = false;
      sum += b.value_or(0.0);
    }
    if (!complete) continue;
    const double avg = p::avg_daily_consumption(s, berlin, ps);
    EXPECT_NEAR(sum, avg, 1e-9 * std::max(1.0, avg));
  }
}

TEST(Profiles, ChunkedInputMatchesWhole) {
  std::mt19937_64 rng(3);
  const elkg::Zone ny("America/New_York");
  for (int rep = 0; rep < 20; ++rep) {
    Millis period = 0;
    const auto s = random_series(rng, period);
    const double ps = static_cast<double>(period) / 1000.0;
    p::EnergyLedger whole(ny, ps), chunked(ny, ps);
    whole.push(s);
    whole.finish();
    std::size_t i = 0;
    while (i < s.size()) {
      const std::size_t n = std::min<std::size_t>(s.size() - i, std::uniform_int_distribution<std::size_t>(1, 999)(rng));
      elkg::TimeSeries c;
      for (std::size_t k = i; k < i + n; ++k) c.push_back(s.timestamps[k], s.watts[k]);
      chunked.push(c);
      i += n;
    }
    chunked.finish();
    ASSERT_EQ(whole.hours().size(), chunked.hours().size());
    for (auto a = whole.hours().begin(), b = chunked.hours().begin(); a != whole.hours().end(); ++a, ++b) {
      EXPECT_EQ(a->first, b->first);
      EXPECT_EQ(a->second.joules, b->second.joules);
      EXPECT_EQ(a->second.covered_ms, b->second.covered_ms);
    }
  }
}

TEST(Profiles, ShortOrSparseSeriesIsInsufficient) {
  const elkg::Zone utc = elkg::Zone::utc();
  EXPECT_THROW(p::avg_daily_consumption(constant(kT0, kT0 + kDay / 2, 1000, 5.0), utc, 1.0),
               elkg::InsufficientDataError);
  // Two days of readings every hour with a 1 s hold cover almost nothing.
  EXPECT_THROW(p::avg_daily_consumption(constant(kT0, kT0 + 2 * kDay, 3600000, 5.0), utc, 1.0),
               elkg::InsufficientDataError);
  EXPECT_THROW(p::load_profile(elkg::TimeSeries{}, p::ProfileKind::daily, utc, 1.0),
               elkg::InsufficientDataError);
}

TEST(Profiles, LowCoverageDaysAreExcluded) {
  const elkg::Zone utc = elkg::Zone::utc();
  auto s = constant(kT0, kT0 + kDay, 1000, 1000.0);
  // Second day only half covered at 2 kW.
  for (Millis t = kT0 + kDay; t < kT0 + kDay + kDay / 2; t += 1000) s.push_back(t, 2000.0);
  EXPECT_NEAR(p::avg_daily_consumption(s, utc, 1.0), 24.0, 1e-9);
  p::ProfileConfig loose;
  loose.coverage_floor = 0.4;
  EXPECT_NEAR(p::avg_daily_consumption(s, utc, 1.0, loose), 24.0, 1e-9);
}

TEST(Events, PulsesAreDetectedWithEnergy) {
  elkg::TimeSeries s;
  for (Millis t = 0; t < 2 * kDay; t += 8000) {
    s.push_back(t, (t / 1000) % 14400 < 180 ? 2000.0 : 0.0);
  }
  const auto ev = p::detect_events(s, 8.0);
  ASSERT_EQ(ev.size(), 12u);
  for (const auto& e : ev) {
    EXPECT_EQ(e.end - e.start, 184000);  // 23 samples of 8 s
    EXPECT_NEAR(e.energy_kwh, 2000.0 * 184 / 3.6e6, 1e-12);
  }
}

TEST(Events, ShortGapsMergeAndShortRunsDrop) {
  // 2 min on, 10 s off, 2 min on, then a 30 s blip.
  elkg::TimeSeries s;
  auto add = [&](Millis from, Millis to, double w) {
    for (Millis t = from; t < to; t += 1000) s.push_back(t, w);
  };
  add(0, 120000, 100);
  add(120000, 130000, 0);
  add(130000, 250000, 100);
  add(250000, 600000, 0);
  add(600000, 630000, 100);
  add(630000, 700000, 0);
  const auto ev = p::detect_events(s, 1.0);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].start, 0);
  EXPECT_EQ(ev[0].end, 250000);
  EXPECT_NEAR(ev[0].energy_kwh, 100.0 * 240 / 3.6e6, 1e-12);
}

TEST(Profiles, CarbonFootprint) {
  EXPECT_NEAR(p::carbon_footprint(10.0, 238.0).value(), 2.38, 1e-12);
  EXPECT_FALSE(p::carbon_footprint(10.0, std::nullopt));
  EXPECT_THROW(p::carbon_footprint(-1.0, 5.0), elkg::Error);
}

TEST(Profiles, ComputeMeterAndJsonRoundTrip) {
  const elkg::Zone utc = elkg::Zone::utc();
  elkg::TimeSeries s;
  for (Millis t = kT0; t < kT0 + 3 * kDay; t += 8000) s.push_back(t, (t / 1000) % 3600 < 600 ? 1500.0 : 3.0);
  const auto m = p::compute_meter(s, true, utc, 8.0, 238.0);
  ASSERT_TRUE(m.stats);
  EXPECT_EQ(m.stats->event_count, 72u);
  EXPECT_TRUE(m.stats->avg_event_kwh);
  EXPECT_NEAR(*m.stats->carbon_kg_day, m.stats->avg_daily_kwh * 0.238, 1e-12);

  p::HouseholdProfiles hp{"DS", "h1", "UTC", m, {{"kettle", m}}};
  const auto back = p::household_profiles_from_json(p::to_json(hp));
  EXPECT_EQ(p::to_json(back), p::to_json(hp));

  const auto csv = p::plot_csv(*m.daily);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "hour,energy_kwh,coverage");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 25);
}

TEST(Profiles, EmptySeriesReportsError) {
  const auto m = p::compute_meter(elkg::TimeSeries{}, false, elkg::Zone::utc(), 1.0, std::nullopt);
  EXPECT_FALSE(m.daily);
  EXPECT_FALSE(m.error.empty());
}
