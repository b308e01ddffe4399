#include "elkg/enrich.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "elkg/text.hpp"

namespace elkg::enrich {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_coordinate_indicator(const std::string& name) {
  return name == kPopulationDensity || name == kElevation;
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double kRad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * kRad;
  const double dlon = (lon2 - lon1) * kRad;
  const double s = std::sin(dlat / 2.0);
  const double t = std::sin(dlon / 2.0);
  const double a = s * s + std::cos(lat1 * kRad) * std::cos(lat2 * kRad) * t * t;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

// ---------------------------------------------------------------------------
// GeoConfig

GeoConfig GeoConfig::from_json(const json& j) {
  GeoConfig g;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "datasets") {
        for (const auto& [name, d] : v.items()) {
          DatasetDefaults dd;
          for (const auto& [dk, dv] : d.items()) {
            if (dk == "country") dd.country = dv.get<std::string>();
            else if (dk == "city") dd.city = dv.get<std::string>();
            else if (dk == "lat") dd.lat = dv.get<double>();
            else if (dk == "lon") dd.lon = dv.get<double>();
            else if (dk == "timezone" || dk == "comment") continue;
            else throw ConfigError("geo config: unknown dataset key '" + dk + "' in " + name);
          }
          g.datasets[name] = dd;
        }
      } else if (k == "countries") {
        for (const auto& [name, c] : v.items()) {
          g.continent_of[name] = c.at("continent").get<std::string>();
          for (const auto& alias : c.value("aliases", json::array())) {
            g.country_aliases[to_lower(alias.get<std::string>())] = name;
          }
        }
      } else if (k == "grid_max_distance_km") {
        if (!v.is_null()) g.grid_max_distance_km = v.get<double>();
      } else if (k != "comment") {
        throw ConfigError("geo config: unknown key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("geo config: ") + e.what());
  }
  for (const auto& [name, _] : g.continent_of) g.country_aliases[to_lower(name)] = name;
  for (const auto& [name, d] : g.datasets) {
    if (d.country) {
      const std::string c = g.canonical_country(*d.country);
      if (!g.continent_of.count(c)) {
        throw ConfigError("geo config: dataset " + name + " uses undeclared country '" +
                          *d.country + "'");
      }
    }
  }
  return g;
}

GeoConfig GeoConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::string GeoConfig::canonical_country(const std::string& raw) const {
  const std::string key = to_lower(trim(raw));
  auto it = country_aliases.find(key);
  return it == country_aliases.end() ? std::string(trim(raw)) : it->second;
}

// ---------------------------------------------------------------------------
// resolve_location

namespace {

std::optional<std::string> meta_value(const harmonize::HouseholdRecord& r,
                                      std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    for (const auto& [mk, mv] : r.metadata) {
      if (to_lower(mk) == k && !trim(mv).empty()) return std::string(trim(mv));
    }
  }
  return std::nullopt;
}

std::optional<double> meta_number(const harmonize::HouseholdRecord& r,
                                  std::initializer_list<const char*> keys) {
  auto v = meta_value(r, keys);
  if (!v) return std::nullopt;
  auto d = parse_double(*v);
  if (!d) {
    throw ConfigError(r.dataset + "/" + r.household + ": non-numeric coordinate '" + *v + "'");
  }
  return d;
}

}  // namespace

LocationMeta resolve_location(const harmonize::HouseholdRecord& r, const GeoConfig& geo) {
  LocationMeta loc;
  const GeoConfig::DatasetDefaults* defaults = nullptr;
  if (auto it = geo.datasets.find(r.dataset); it != geo.datasets.end()) defaults = &it->second;

  loc.lat = meta_number(r, {"lat", "latitude"});
  loc.lon = meta_number(r, {"lon", "lng", "longitude"});
  if (!loc.has_coordinates()) {
    loc.lat.reset();
    loc.lon.reset();
    if (defaults && defaults->lat && defaults->lon) {
      loc.lat = defaults->lat;
      loc.lon = defaults->lon;
    }
  }
  if (loc.has_coordinates() &&
      (*loc.lat < -90.0 || *loc.lat > 90.0 || *loc.lon < -180.0 || *loc.lon > 180.0)) {
    throw ConfigError(r.dataset + "/" + r.household + ": coordinates out of range");
  }

  auto country = meta_value(r, {"country"});
  if (!country && defaults && defaults->country) country = defaults->country;
  if (!country) {
    throw UnlocatableError(r.dataset + "/" + r.household +
                           (loc.has_coordinates() ? ": coordinates without a known country"
                                                  : ": neither coordinates nor country known"));
  }
  loc.country = geo.canonical_country(*country);
  if (auto it = geo.continent_of.find(loc.country); it != geo.continent_of.end()) {
    loc.continent = it->second;
  }
  loc.city = meta_value(r, {"city"});
  if (!loc.city && defaults && defaults->city) loc.city = defaults->city;
  return loc;
}

// ---------------------------------------------------------------------------
// Indicator tables

namespace {

struct Header {
  std::map<std::string, std::size_t> index;
  std::size_t at(const std::string& col, const std::string& origin) const {
    auto it = index.find(col);
    if (it == index.end()) throw ConfigError(origin + ": missing column '" + col + "'");
    return it->second;
  }
};

Header read_header(CsvReader& reader, const std::string& origin) {
  std::vector<std::string> f;
  if (!reader.next(f)) throw ConfigError(origin + ": empty indicator table");
  Header h;
  for (std::size_t i = 0; i < f.size(); ++i) h.index[to_lower(trim(f[i]))] = i;
  return h;
}

std::optional<int> parse_year(const std::string& s, const std::string& where) {
  if (trim(s).empty()) return std::nullopt;
  auto y = parse_int(s);
  if (!y) throw ConfigError(where + ": bad year '" + s + "'");
  return static_cast<int>(*y);
}

double require_number(const std::string& s, const std::string& where, const char* what) {
  auto v = parse_double(s);
  if (!v) throw ConfigError(where + ": bad " + std::string(what) + " '" + s + "'");
  return *v;
}

}  // namespace

void IndicatorTables::add_country_csv(const std::string& text, const std::string& origin) {
  try {
    CsvReader reader(text);
    const Header h = read_header(reader, origin);
    const std::size_t c_country = h.at("country", origin), c_ind = h.at("indicator", origin),
                      c_val = h.at("value", origin), c_unit = h.at("unit", origin),
                      c_year = h.at("year", origin), c_src = h.at("source", origin);
    const std::size_t width = h.index.size();
    std::vector<std::string> f;
    while (reader.next(f)) {
      if (f.size() == 1 && trim(f[0]).empty()) continue;
      const std::string where = origin + ":" + std::to_string(reader.line());
      if (f.size() != width) throw ConfigError(where + ": expected " + std::to_string(width) + " fields");
      const std::string country(trim(f[c_country]));
      const std::string ind = to_lower(trim(f[c_ind]));
      if (country.empty() || ind.empty()) throw ConfigError(where + ": empty key");
      if (is_coordinate_indicator(ind)) {
        throw ConfigError(where + ": '" + ind + "' is coordinate-keyed; put it in a grid table");
      }
      Indicator v{require_number(f[c_val], where, "value"), std::string(trim(f[c_unit])),
                  std::string(trim(f[c_src])), parse_year(f[c_year], where)};
      if (!by_country[country].emplace(ind, v).second) {
        throw ConfigError(where + ": duplicate " + country + "/" + ind);
      }
    }
  } catch (const ParseError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

void IndicatorTables::add_grid_csv(const std::string& text, const std::string& origin) {
  try {
    CsvReader reader(text);
    const Header h = read_header(reader, origin);
    const std::size_t c_ind = h.at("indicator", origin), c_lat = h.at("lat", origin),
                      c_lon = h.at("lon", origin), c_val = h.at("value", origin),
                      c_unit = h.at("unit", origin), c_year = h.at("year", origin),
                      c_src = h.at("source", origin);
    const std::size_t width = h.index.size();
    std::vector<std::string> f;
    while (reader.next(f)) {
      if (f.size() == 1 && trim(f[0]).empty()) continue;
      const std::string where = origin + ":" + std::to_string(reader.line());
      if (f.size() != width) throw ConfigError(where + ": expected " + std::to_string(width) + " fields");
      const std::string ind = to_lower(trim(f[c_ind]));
      const double lat = require_number(f[c_lat], where, "lat");
      const double lon = require_number(f[c_lon], where, "lon");
      if (lat < -90 || lat > 90 || lon < -180 || lon > 180) {
        throw ConfigError(where + ": cell coordinates out of range");
      }
      Layer& layer = grids[ind];
      const std::string unit(trim(f[c_unit]));
      const std::string source(trim(f[c_src]));
      const auto year = parse_year(f[c_year], where);
      if (layer.cells.empty()) {
        layer.unit = unit;
        layer.source = source;
        layer.year = year;
      } else if (layer.unit != unit || layer.source != source || layer.year != year) {
        throw ConfigError(where + ": unit/source/year differ within layer '" + ind + "'");
      }
      layer.cells.push_back({lat, lon, require_number(f[c_val], where, "value")});
    }
  } catch (const ParseError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

IndicatorTables IndicatorTables::load_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("indicator directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  IndicatorTables t;
  for (const auto& p : files) {
    const bool grid = p.parent_path().filename() == "grid";
    if (grid) t.add_grid_csv(read_file(p), p.string());
    else t.add_country_csv(read_file(p), p.string());
  }
  return t;
}

LocationMeta attach_indicators(LocationMeta loc, const IndicatorTables& tables,
                               std::optional<double> max_km) {
  if (auto it = tables.by_country.find(loc.country); it != tables.by_country.end()) {
    for (const auto& [name, v] : it->second) loc.indicators.try_emplace(name, v);
  }
  if (!loc.has_coordinates()) return loc;
  for (const auto& [name, layer] : tables.grids) {
    if (loc.indicators.count(name)) continue;
    const GridCell* best = nullptr;
    double best_d = 0.0;
    for (const auto& c : layer.cells) {
      const double d = haversine_km(*loc.lat, *loc.lon, c.lat, c.lon);
      // Ties resolve to the earlier cell so the result never depends on hashing.
      if (!best || d < best_d) {
        best = &c;
        best_d = d;
      }
    }
    if (best && (!max_km || best_d <= *max_km)) {
      loc.indicators.emplace(name, Indicator{best->value, layer.unit, layer.source, layer.year});
    }
  }
  return loc;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const LocationMeta& loc) {
  json j;
  j["lat"] = loc.lat ? json(*loc.lat) : json(nullptr);
  j["lon"] = loc.lon ? json(*loc.lon) : json(nullptr);
  j["city"] = loc.city ? json(*loc.city) : json(nullptr);
  j["country"] = loc.country;
  j["continent"] = loc.continent;
  json ind = json::object();
  for (const auto& [k, v] : loc.indicators) {
    ind[k] = {{"value", v.value}, {"unit", v.unit}, {"source", v.source},
              {"year", v.year ? json(*v.year) : json(nullptr)}};
  }
  j["indicators"] = ind;
  return j;
}

LocationMeta location_from_json(const json& j) {
  LocationMeta loc;
  try {
    if (!j.at("lat").is_null()) loc.lat = j["lat"].get<double>();
    if (!j.at("lon").is_null()) loc.lon = j["lon"].get<double>();
    if (!j.at("city").is_null()) loc.city = j["city"].get<std::string>();
    loc.country = j.at("country").get<std::string>();
    loc.continent = j.at("continent").get<std::string>();
    for (const auto& [k, v] : j.at("indicators").items()) {
      Indicator ind;
      ind.value = v.at("value").get<double>();
      ind.unit = v.at("unit").get<std::string>();
      ind.source = v.at("source").get<std::string>();
      if (!v.at("year").is_null()) ind.year = v["year"].get<int>();
      loc.indicators[k] = ind;
    }
  } catch (const json::exception& e) {
    throw FormatError("location document", e.what());
  }
  return loc;
}

}  // namespace elkg::enrich
