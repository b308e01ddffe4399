#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "elkg/harmonize.hpp"

namespace elkg::archive {

// Harmonized Household Archive layout:
//
//   <root>/<dataset>/<household>/metadata.json
//   <root>/<dataset>/<household>/aggregate.csv            (optional)
//   <root>/<dataset>/<household>/<canonical_appliance>.csv
//   <root>/<dataset>/<household>/quarantine/<slug>.csv
//
// Series files carry the header `timestamp_utc,power_w`, RFC 3339 UTC
// timestamps and watts with at most three fractional digits.

inline constexpr const char* kSeriesHeader = "timestamp_utc,power_w";

/// Writes (replacing) one household directory.
void write_household(const harmonize::HouseholdRecord& record,
                     const std::filesystem::path& root);

void write_archive(const std::vector<harmonize::HouseholdRecord>& records,
                   const std::filesystem::path& root, unsigned threads = 0);

struct HouseholdRef {
  std::string dataset;
  std::string household;
  std::filesystem::path dir;
};

/// Household directories under `root`, sorted by (dataset, household).
/// Throws FormatError when root is missing.
std::vector<HouseholdRef> list_households(const std::filesystem::path& root);

/// Throws FormatError naming the offending path on any layout violation.
harmonize::HouseholdRecord read_household(const std::filesystem::path& dir);

std::vector<harmonize::HouseholdRecord> read_archive(const std::filesystem::path& root,
                                                     unsigned threads = 0);

std::string serialize_series(const TimeSeries& series);
TimeSeries parse_series(const std::string& text, const std::string& path);

}  // namespace elkg::archive
