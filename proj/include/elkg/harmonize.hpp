#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "elkg/series.hpp"
#include "elkg/time.hpp"

namespace elkg::harmonize {

enum class Layout { file_per_appliance, file_per_house, multi_house_file };
enum class PowerUnit { watts, kilowatts };
enum class Submetering { all, none, partial };

std::string_view to_string(Layout layout);

/// How to read one source dataset. Loaded from a JSON file; see
/// config/datasets/README.md for every key.
struct DatasetDescriptor {
  std::string name;
  Layout layout = Layout::file_per_appliance;
  char delimiter = ',';
  std::string file_extension = ".csv";

  std::string timestamp_column = "timestamp";
  /// "unix_s", "unix_ms", "rfc3339", or a strftime-style pattern read in
  /// `timezone`.
  std::string timestamp_format = "unix_s";
  std::string timezone = "UTC";
  PowerUnit unit = PowerUnit::watts;
  double sampling_period_s = 1.0;

  /// file_per_appliance: the column holding power readings.
  std::string value_column = "power";
  /// file_per_house / multi_house_file: appliance columns to read. Empty
  /// means every column other than timestamp and household.
  std::vector<std::string> value_columns;
  /// multi_house_file: the column naming the household of each row.
  std::string household_column = "household";
  /// Raw names that denote the whole-house meter.
  std::vector<std::string> aggregate_names{"aggregate", "mains"};

  Submetering submetering = Submetering::all;
  /// Used when submetering == partial.
  std::set<std::string> submetered_households;

  /// Optional CSV (relative to the raw root) with a `household` column; the
  /// other columns become raw metadata.
  std::string metadata_file;

  /// Reference values copied from the dataset summary (informational).
  nlohmann::json reference = nlohmann::json::object();

  bool is_submetered(const std::string& household) const;
  /// Coarser than the 8 s training grid.
  bool below_ml_resolution() const noexcept { return sampling_period_s > 8.0; }
  double unit_factor() const noexcept {
    return unit == PowerUnit::kilowatts ? 1000.0 : 1.0;
  }
};

/// Throws ConfigError on missing/invalid keys.
DatasetDescriptor descriptor_from_json(const nlohmann::json& j);
DatasetDescriptor load_descriptor(const std::filesystem::path& path);
/// Every *.json in `dir`, sorted by dataset name.
std::vector<DatasetDescriptor> load_descriptors(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Appliance names

enum class NameClass { canonical, excluded, unknown };

struct Canonicalized {
  NameClass kind;
  /// The canonical name (canonical), the matched exclusion (excluded), or the
  /// normalized input (unknown).
  std::string name;
  friend bool operator==(const Canonicalized&, const Canonicalized&) = default;
};

/// Lowercase, punctuation to spaces, collapsed whitespace, trailing number
/// tokens dropped ("Plug/Outlet 3" -> "plug outlet").
std::string normalize_appliance_key(std::string_view raw);

class SynonymMap {
 public:
  /// Throws ConfigError when an alias targets a non-canonical name, a key maps
  /// to two canonical names, or an exclusion collides with a canonical name.
  static SynonymMap from_json(const nlohmann::json& j);
  static SynonymMap load(const std::filesystem::path& path);

  /// ML classes in label bit order.
  const std::vector<std::string>& ml_classes() const noexcept { return ml_classes_; }
  const std::set<std::string>& canonical_names() const noexcept { return canonical_; }
  std::optional<std::size_t> class_index(std::string_view canonical) const;
  bool is_canonical(std::string_view name) const;

  Canonicalized canonicalize(std::string_view raw) const;

 private:
  std::vector<std::string> ml_classes_;
  std::set<std::string> canonical_;
  std::unordered_map<std::string, std::string> lookup_;
  std::vector<std::vector<std::string>> excluded_;  // token sequences
};

inline Canonicalized canonicalize_appliance(std::string_view name,
                                            const SynonymMap& map) {
  return map.canonicalize(name);
}

// ---------------------------------------------------------------------------
// Series cleaning and resampling

struct RawSample {
  Millis t;
  std::optional<double> watts;  // nullopt: absent or unparseable cell
};

/// Drops absent/non-finite readings, keeps the first valid reading of each
/// timestamp (input order), sorts ascending. Never fills or interpolates.
/// An empty result is the empty-series condition; callers check empty().
TimeSeries clean_series(std::vector<RawSample> raw);

/// Bin means on an epoch-aligned grid of `period_ms`. Output timestamps are
/// bin starts; bins without input samples are absent.
TimeSeries resample(const TimeSeries& series, Millis period_ms);

/// Round to the archive resolution (1 mW).
double quantize_watts(double w);

// ---------------------------------------------------------------------------
// Records and parsing

struct QuarantinedSeries {
  std::string raw_name;
  std::string reason;  // "unknown", "excluded", "duplicate"
  TimeSeries series;
  friend bool operator==(const QuarantinedSeries&, const QuarantinedSeries&) = default;
};

struct HouseholdRecord {
  std::string dataset;
  std::string household;
  std::string timezone = "UTC";
  bool submetered = false;
  double sampling_period_s = 1.0;
  std::optional<TimeSeries> aggregate;
  std::map<std::string, TimeSeries> appliances;  // canonical name -> series
  std::map<std::string, QuarantinedSeries> quarantine;  // file slug -> series
  std::map<std::string, std::string> metadata;

  std::size_t series_count() const noexcept {
    return appliances.size() + quarantine.size() + (aggregate ? 1 : 0);
  }
  friend bool operator==(const HouseholdRecord&, const HouseholdRecord&) = default;
};

struct FileIssue {
  std::string path;
  std::string message;
};

struct ParseReport {
  std::vector<FileIssue> file_errors;
  std::vector<std::string> omitted_households;  // no usable series
  std::vector<FileIssue> empty_series;          // series empty after cleaning
  std::map<std::string, std::size_t> unknown_names;   // normalized -> count
  std::map<std::string, std::size_t> excluded_names;  // raw -> count
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

struct ParseResult {
  std::vector<HouseholdRecord> records;  // sorted by household
  ParseReport report;
};

/// Read one dataset from `raw_root` per the descriptor. Unreadable files are
/// reported and skipped; unknown configured columns throw ConfigError.
ParseResult parse_dataset(const DatasetDescriptor& descriptor,
                          const std::filesystem::path& raw_root,
                          const SynonymMap& synonyms, unsigned threads = 0);

/// File-system safe form of a name (letters, digits, '_', '-', '.').
std::string slug(std::string_view name);

}  // namespace elkg::harmonize
