#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elkg/error.hpp"
#include "elkg/harmonize.hpp"

namespace elkg::enrich {

/// Known indicator keys. Others are accepted and carried through as-is.
inline constexpr const char* kGdp = "gdp";
inline constexpr const char* kAverageWage = "average_wage";
inline constexpr const char* kEducation = "education_attainment";
inline constexpr const char* kElectricityPrice = "electricity_price";
inline constexpr const char* kGasPrice = "gas_price";
inline constexpr const char* kPopulationDensity = "population_density";
inline constexpr const char* kElevation = "elevation";
inline constexpr const char* kCarbonIntensity = "carbon_intensity";

/// Indicators that only make sense for a point; never filled from a
/// country-level table.
bool is_coordinate_indicator(const std::string& name);

struct Indicator {
  double value = 0.0;
  std::string unit;
  std::string source;
  std::optional<int> year;
  friend bool operator==(const Indicator&, const Indicator&) = default;
};

struct LocationMeta {
  std::optional<double> lat;
  std::optional<double> lon;
  std::optional<std::string> city;
  std::string country;
  std::string continent;
  std::map<std::string, Indicator> indicators;

  bool has_coordinates() const noexcept { return lat.has_value() && lon.has_value(); }
  friend bool operator==(const LocationMeta&, const LocationMeta&) = default;
};

/// Dataset defaults and country facts used to place households.
struct GeoConfig {
  struct DatasetDefaults {
    std::optional<std::string> country;
    std::optional<std::string> city;
    std::optional<double> lat;
    std::optional<double> lon;
  };
  std::map<std::string, DatasetDefaults> datasets;
  std::map<std::string, std::string> continent_of;     // country -> continent
  std::map<std::string, std::string> country_aliases;  // lowercase alias -> country
  /// Cap for nearest-cell lookups; cells farther away are ignored.
  std::optional<double> grid_max_distance_km;

  static GeoConfig from_json(const nlohmann::json& j);
  static GeoConfig load(const std::filesystem::path& path);

  /// Canonical country name for raw text (case-insensitive alias lookup).
  std::string canonical_country(const std::string& raw) const;
};

/// Raised when a household has neither coordinates nor a country.
class UnlocatableError : public Error {
 public:
  using Error::Error;
};

/// Coordinates from raw metadata (lat/latitude, lon/lng/longitude) win over
/// dataset defaults; country from metadata, else the dataset default.
/// Throws UnlocatableError when no country can be determined, and
/// ConfigError for out-of-range coordinates.
LocationMeta resolve_location(const harmonize::HouseholdRecord& record, const GeoConfig& geo);

struct GridCell {
  double lat;
  double lon;
  double value;
};

struct IndicatorTables {
  /// country -> indicator -> value
  std::map<std::string, std::map<std::string, Indicator>> by_country;
  /// indicator -> cells, plus shared unit/source metadata per indicator
  struct Layer {
    std::string unit;
    std::string source;
    std::optional<int> year;
    std::vector<GridCell> cells;
  };
  std::map<std::string, Layer> grids;

  /// Country CSV: `country,indicator,value,unit,year,source`.
  /// Throws ConfigError on malformed rows or duplicate keys.
  void add_country_csv(const std::string& text, const std::string& origin);
  /// Grid CSV: `indicator,lat,lon,value,unit,year,source`.
  void add_grid_csv(const std::string& text, const std::string& origin);

  /// Every *.csv under `dir`; files under a `grid/` subdirectory are grids.
  static IndicatorTables load_dir(const std::filesystem::path& dir);
};

/// Fill absent indicators from the tables: country-keyed layers by exact
/// country, coordinate layers by nearest cell (only when coordinates exist).
/// Present values are never replaced.
LocationMeta attach_indicators(LocationMeta loc, const IndicatorTables& tables,
                               std::optional<double> grid_max_distance_km = std::nullopt);

/// Great-circle distance in km (mean Earth radius 6371.0088 km).
double haversine_km(double lat1, double lon1, double lat2, double lon2);

nlohmann::json to_json(const LocationMeta& loc);
LocationMeta location_from_json(const nlohmann::json& j);

}  // namespace elkg::enrich
