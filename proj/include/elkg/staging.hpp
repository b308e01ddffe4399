#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "elkg/enrich.hpp"
#include "elkg/harmonize.hpp"
#include "elkg/profiles.hpp"

namespace elkg::staging {

enum class ColumnType { string, integer, decimal, boolean };

std::string_view to_string(ColumnType t);
ColumnType column_type_from(const std::string& s);

struct Column {
  std::string name;
  ColumnType type = ColumnType::string;
  bool nullable = true;
  friend bool operator==(const Column&, const Column&) = default;
};

struct ForeignKey {
  std::string column;
  std::string ref_table;
  std::string ref_column;
  friend bool operator==(const ForeignKey&, const ForeignKey&) = default;
};

/// Cells hold lexical forms; nullopt is SQL NULL. Empty strings are never
/// stored (they would be indistinguishable from NULL in CSV).
using Cell = std::optional<std::string>;
using Row = std::vector<Cell>;

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::string primary_key;
  std::vector<ForeignKey> foreign_keys;
  std::vector<Row> rows;

  std::optional<std::size_t> column_index(std::string_view column) const;
  /// Throws ConfigError for unknown columns.
  std::size_t require_column(std::string_view column) const;
  friend bool operator==(const Table&, const Table&) = default;
};

struct StagingBundle {
  Table households;
  Table locations;
  Table devices;

  /// Empty tables with the fixed schema.
  static StagingBundle empty();

  const Table* table(std::string_view name) const;
  std::vector<const Table*> tables() const { return {&households, &locations, &devices}; }

  /// Primary keys unique and non-null, foreign keys resolve, cells match
  /// their column types. Throws IntegrityError naming the offending row.
  void validate() const;
  friend bool operator==(const StagingBundle&, const StagingBundle&) = default;
};

/// Per-household enrichment outcome; absent when the household could not be
/// located.
using LocationIndex = std::map<std::pair<std::string, std::string>, enrich::LocationMeta>;
using ProfileIndex = std::map<std::pair<std::string, std::string>, profiles::HouseholdProfiles>;

/// Household ids follow (dataset, household) order, device ids (dataset,
/// household, device), location ids the sorted location key. Households
/// sharing a city share one location row. Throws IntegrityError when a
/// profile or location references a household missing from the archive.
StagingBundle build_staging(const std::vector<harmonize::HouseholdRecord>& archive,
                            const ProfileIndex& profiles, const LocationIndex& locations);

/// Writes `<table>.csv` per table, `schema.json` and `schema.sql`.
void export_staging(const StagingBundle& bundle, const std::filesystem::path& dir);
/// Reads the CSVs back against the manifest; throws FormatError on mismatch.
StagingBundle import_staging(const std::filesystem::path& dir);

std::string table_csv(const Table& t);
nlohmann::json schema_manifest(const StagingBundle& b);
std::string schema_sql(const StagingBundle& b);

/// Compact text form of a profile: bucket values joined by ';', absent
/// buckets empty.
std::string profile_text(const profiles::LoadProfile& p);

}  // namespace elkg::staging
