#pragma once

#include <cstddef>
#include <vector>

#include "elkg/time.hpp"

namespace elkg {

/// Power readings in watts for one meter or sub-meter. Timestamps are UTC,
/// strictly increasing. Missing data is a gap in the timestamps, never a
/// sentinel value.
struct TimeSeries {
  std::vector<Millis> timestamps;
  std::vector<double> watts;

  std::size_t size() const noexcept { return timestamps.size(); }
  bool empty() const noexcept { return timestamps.empty(); }
  void reserve(std::size_t n) {
    timestamps.reserve(n);
    watts.reserve(n);
  }
  void push_back(Millis t, double w) {
    timestamps.push_back(t);
    watts.push_back(w);
  }

  /// True when timestamps are strictly increasing and every value is finite.
  bool well_formed() const noexcept;

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;
};

}  // namespace elkg
