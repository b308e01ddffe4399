#include "elkg/series.hpp"

#include <cmath>

namespace elkg {

bool TimeSeries::well_formed() const noexcept {
  if (timestamps.size() != watts.size()) return false;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (!std::isfinite(watts[i])) return false;
    if (i > 0 && timestamps[i] <= timestamps[i - 1]) return false;
  }
  return true;
}

}  // namespace elkg
