#include <algorithm>
#include <cmath>

#include "elkg/harmonize.hpp"

namespace elkg::harmonize {

TimeSeries clean_series(std::vector<RawSample> raw) {
  std::erase_if(raw, [](const RawSample& s) {
    return !s.watts.has_value() || !std::isfinite(*s.watts);
  });
  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawSample& a, const RawSample& b) { return a.t < b.t; });
  TimeSeries out;
  out.reserve(raw.size());
  for (const RawSample& s : raw) {
    if (!out.empty() && out.timestamps.back() == s.t) continue;
    out.push_back(s.t, *s.watts);
  }
  return out;
}

TimeSeries resample(const TimeSeries& series, Millis period_ms) {
  TimeSeries out;
  if (series.empty() || period_ms <= 0) return out;
  std::int64_t bin = floor_div(series.timestamps[0], period_ms);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::int64_t b = floor_div(series.timestamps[i], period_ms);
    if (b != bin) {
      out.push_back(bin * period_ms, sum / static_cast<double>(count));
      bin = b;
      sum = 0.0;
      count = 0;
    }
    sum += series.watts[i];
    ++count;
  }
  out.push_back(bin * period_ms, sum / static_cast<double>(count));
  return out;
}

double quantize_watts(double w) {
  const double q = std::round(w * 1000.0) / 1000.0;
  return q == 0.0 ? 0.0 : q;
}

}  // namespace elkg::harmonize
