#include "elkg/staging.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "elkg/error.hpp"
#include "elkg/text.hpp"

namespace elkg::staging {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ColumnType t) {
  switch (t) {
    case ColumnType::string: return "string";
    case ColumnType::integer: return "integer";
    case ColumnType::decimal: return "decimal";
    case ColumnType::boolean: return "boolean";
  }
  return "?";
}

ColumnType column_type_from(const std::string& s) {
  if (s == "string") return ColumnType::string;
  if (s == "integer") return ColumnType::integer;
  if (s == "decimal") return ColumnType::decimal;
  if (s == "boolean") return ColumnType::boolean;
  throw ConfigError("unknown column type '" + s + "'");
}

std::optional<std::size_t> Table::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == column) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view column) const {
  auto i = column_index(column);
  if (!i) throw ConfigError("table " + name + " has no column '" + std::string(column) + "'");
  return *i;
}

namespace {

constexpr const char* kIndicatorColumns[] = {
    enrich::kGdp,           enrich::kAverageWage,       enrich::kEducation,
    enrich::kElectricityPrice, enrich::kGasPrice,       enrich::kPopulationDensity,
    enrich::kElevation,     enrich::kCarbonIntensity};

Column col(std::string name, ColumnType t, bool nullable = true) {
  return {std::move(name), t, nullable};
}

bool valid_lexical(const std::string& v, ColumnType t) {
  switch (t) {
    case ColumnType::string: return !v.empty();
    case ColumnType::integer: return parse_int(v).has_value();
    case ColumnType::decimal: return parse_double(v).has_value();
    case ColumnType::boolean: return v == "true" || v == "false";
  }
  return false;
}

Cell dec(std::optional<double> v) {
  return v ? Cell(format_decimal(*v)) : std::nullopt;
}
Cell integer(std::optional<long long> v) {
  return v ? Cell(std::to_string(*v)) : std::nullopt;
}
Cell boolean(bool v) { return std::string(v ? "true" : "false"); }
Cell str(const std::string& v) { return v.empty() ? std::nullopt : Cell(v); }

}  // namespace

StagingBundle StagingBundle::empty() {
  using T = ColumnType;
  StagingBundle b;
  b.households.name = "households";
  b.households.primary_key = "id";
  b.households.columns = {
      col("id", T::integer, false),        col("name", T::string, false),
      col("dataset", T::string, false),    col("household", T::string, false),
      col("timezone", T::string, false),   col("house_size", T::decimal),
      col("occupants", T::integer),        col("is_submetered", T::boolean, false),
      col("avg_daily_kwh", T::decimal),    col("carbon_kg_day", T::decimal),
      col("location_id", T::integer),      col("daily_profile", T::string),
      col("weekly_profile", T::string),    col("monthly_profile", T::string),
      col("extra", T::string)};
  b.households.foreign_keys = {{"location_id", "locations", "id"}};

  b.locations.name = "locations";
  b.locations.primary_key = "id";
  b.locations.columns = {col("id", T::integer, false), col("city", T::string),
                         col("country", T::string, false), col("continent", T::string),
                         col("lat", T::decimal), col("lon", T::decimal)};
  for (const char* ind : kIndicatorColumns) b.locations.columns.push_back(col(ind, T::decimal));

  b.devices.name = "devices";
  b.devices.primary_key = "id";
  b.devices.columns = {
      col("id", T::integer, false),          col("household_id", T::integer, false),
      col("household_name", T::string, false), col("name", T::string, false),
      col("is_aggregate", T::boolean, false), col("avg_daily_kwh", T::decimal),
      col("avg_event_kwh", T::decimal),       col("event_count", T::integer),
      col("is_predicted", T::boolean, false), col("daily_profile", T::string),
      col("weekly_profile", T::string),       col("monthly_profile", T::string)};
  b.devices.foreign_keys = {{"household_id", "households", "id"}};
  return b;
}

const Table* StagingBundle::table(std::string_view name) const {
  for (const Table* t : tables()) {
    if (t->name == name) return t;
  }
  return nullptr;
}

void StagingBundle::validate() const {
  for (const Table* t : tables()) {
    const std::size_t pk = t->require_column(t->primary_key);
    std::set<std::string> keys;
    for (std::size_t r = 0; r < t->rows.size(); ++r) {
      const Row& row = t->rows[r];
      const std::string where = t->name + " row " + std::to_string(r + 1);
      if (row.size() != t->columns.size()) throw IntegrityError(where + ": wrong column count");
      for (std::size_t c = 0; c < row.size(); ++c) {
        const Column& column = t->columns[c];
        if (!row[c]) {
          if (!column.nullable) throw IntegrityError(where + ": " + column.name + " is null");
        } else if (!valid_lexical(*row[c], column.type)) {
          throw IntegrityError(where + ": " + column.name + " value '" + *row[c] +
                               "' is not a valid " + std::string(to_string(column.type)));
        }
      }
      if (!keys.insert(*row[pk]).second) {
        throw IntegrityError(where + ": duplicate primary key " + *row[pk]);
      }
    }
  }
  for (const Table* t : tables()) {
    for (const ForeignKey& fk : t->foreign_keys) {
      const Table* ref = table(fk.ref_table);
      if (!ref) throw IntegrityError(t->name + ": foreign key to unknown table " + fk.ref_table);
      const std::size_t rc = ref->require_column(fk.ref_column);
      std::set<std::string> targets;
      for (const Row& row : ref->rows) {
        if (row[rc]) targets.insert(*row[rc]);
      }
      const std::size_t c = t->require_column(fk.column);
      for (std::size_t r = 0; r < t->rows.size(); ++r) {
        const Cell& v = t->rows[r][c];
        if (v && !targets.count(*v)) {
          throw IntegrityError(t->name + " row " + std::to_string(r + 1) + ": " + fk.column +
                               " = " + *v + " has no matching " + fk.ref_table + "." +
                               fk.ref_column);
        }
      }
    }
  }
}

std::string profile_text(const profiles::LoadProfile& p) {
  std::string out;
  for (std::size_t i = 0; i < p.buckets_kwh.size(); ++i) {
    if (i) out.push_back(';');
    if (p.buckets_kwh[i]) out += format_fixed_trimmed(*p.buckets_kwh[i], 6);
  }
  return out;
}

// ---------------------------------------------------------------------------
// build_staging

namespace {

using HouseKey = std::pair<std::string, std::string>;

const std::set<std::string>& spatial_keys() {
  static const std::set<std::string> k{"lat", "latitude", "lon", "lng", "longitude",
                                       "city", "country"};
  return k;
}

std::optional<std::string> take(std::map<std::string, std::string>& meta,
                                std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    for (auto it = meta.begin(); it != meta.end(); ++it) {
      if (to_lower(it->first) == k) {
        std::string v(trim(it->second));
        meta.erase(it);
        if (!v.empty()) return v;
        break;
      }
    }
  }
  return std::nullopt;
}

void profile_cells(const profiles::MeterProfiles* m, Cell& daily, Cell& weekly, Cell& monthly) {
  if (!m) return;
  if (m->daily) daily = str(profile_text(*m->daily));
  if (m->weekly) weekly = str(profile_text(*m->weekly));
  if (m->monthly) monthly = str(profile_text(*m->monthly));
}

// Households sharing a city share a location; otherwise coordinates, then
// the bare country, identify it.
using LocationKey = std::tuple<std::string, std::string, std::string>;

LocationKey location_key(const enrich::LocationMeta& loc) {
  if (loc.city) return {loc.country, *loc.city, ""};
  if (loc.has_coordinates()) {
    return {loc.country, "", format_fixed_trimmed(*loc.lat, 6) + "," +
                                 format_fixed_trimmed(*loc.lon, 6)};
  }
  return {loc.country, "", ""};
}

}  // namespace

StagingBundle build_staging(const std::vector<harmonize::HouseholdRecord>& archive,
                            const ProfileIndex& profiles, const LocationIndex& locations) {
  std::vector<const harmonize::HouseholdRecord*> records;
  std::set<HouseKey> known;
  for (const auto& r : archive) {
    if (!known.insert({r.dataset, r.household}).second) {
      throw IntegrityError("duplicate household " + r.dataset + "/" + r.household);
    }
    records.push_back(&r);
  }
  std::sort(records.begin(), records.end(), [](auto* a, auto* b) {
    return std::tie(a->dataset, a->household) < std::tie(b->dataset, b->household);
  });
  for (const auto& [key, _] : profiles) {
    if (!known.count(key)) {
      throw IntegrityError("profiles reference unknown household " + key.first + "/" + key.second);
    }
  }
  for (const auto& [key, _] : locations) {
    if (!known.count(key)) {
      throw IntegrityError("location references unknown household " + key.first + "/" + key.second);
    }
  }

  StagingBundle b = StagingBundle::empty();

  // Locations: first household (in id order) of each key supplies the row.
  std::map<LocationKey, const enrich::LocationMeta*> loc_rows;
  for (const auto* r : records) {
    auto it = locations.find({r->dataset, r->household});
    if (it != locations.end()) loc_rows.try_emplace(location_key(it->second), &it->second);
  }
  std::map<LocationKey, long long> loc_ids;
  for (const auto& [key, loc] : loc_rows) {
    const long long id = static_cast<long long>(loc_ids.size()) + 1;
    loc_ids[key] = id;
    Row row{integer(id), loc->city ? str(*loc->city) : std::nullopt, str(loc->country),
            str(loc->continent), dec(loc->lat), dec(loc->lon)};
    for (const char* ind : kIndicatorColumns) {
      auto i = loc->indicators.find(ind);
      row.push_back(i == loc->indicators.end() ? std::nullopt : dec(i->second.value));
    }
    b.locations.rows.push_back(std::move(row));
  }

  long long device_id = 0;
  for (std::size_t hi = 0; hi < records.size(); ++hi) {
    const auto& r = *records[hi];
    const long long hid = static_cast<long long>(hi) + 1;
    const std::string name = r.dataset + "_" + r.household;
    const HouseKey key{r.dataset, r.household};

    auto meta = r.metadata;
    std::optional<double> house_size;
    if (auto v = take(meta, {"house_size", "floor_size", "floor_area", "floorsize"})) {
      house_size = parse_double(*v);
      if (!house_size) meta["house_size"] = *v;
    }
    std::optional<long long> occupants;
    if (auto v = take(meta, {"occupants", "residents", "number_of_occupants"})) {
      occupants = parse_int(*v);
      if (!occupants) meta["occupants"] = *v;
    }
    for (auto it = meta.begin(); it != meta.end();) {
      it = spatial_keys().count(to_lower(it->first)) ? meta.erase(it) : std::next(it);
    }

    const profiles::HouseholdProfiles* hp = nullptr;
    if (auto it = profiles.find(key); it != profiles.end()) hp = &it->second;
    const profiles::MeterProfiles* agg = hp && hp->aggregate ? &*hp->aggregate : nullptr;

    const enrich::LocationMeta* loc = nullptr;
    Cell location_id;
    if (auto it = locations.find(key); it != locations.end()) {
      loc = &it->second;
      location_id = integer(loc_ids.at(location_key(*loc)));
    }

    std::optional<double> avg_daily;
    std::optional<double> carbon;
    if (agg && agg->stats) {
      avg_daily = agg->stats->avg_daily_kwh;
      carbon = agg->stats->carbon_kg_day;
    }
    if (avg_daily && !carbon && loc) {
      auto ci = loc->indicators.find(enrich::kCarbonIntensity);
      if (ci != loc->indicators.end()) carbon = profiles::carbon_footprint(*avg_daily, ci->second.value);
    }

    Row row{integer(hid), str(name), str(r.dataset), str(r.household), str(r.timezone),
            dec(house_size), integer(occupants), boolean(r.submetered), dec(avg_daily),
            dec(carbon), location_id, std::nullopt, std::nullopt, std::nullopt,
            meta.empty() ? std::nullopt : Cell(json(meta).dump())};
    profile_cells(agg, row[11], row[12], row[13]);
    b.households.rows.push_back(std::move(row));

    auto add_device = [&](const std::string& dev, bool is_aggregate,
                          const profiles::MeterProfiles* m) {
      Row d{integer(++device_id), integer(hid), str(name), str(dev), boolean(is_aggregate),
            std::nullopt, std::nullopt, std::nullopt, boolean(false),
            std::nullopt, std::nullopt, std::nullopt};
      if (m && m->stats) {
        d[5] = dec(m->stats->avg_daily_kwh);
        d[6] = dec(m->stats->avg_event_kwh);
        if (m->stats->event_count) d[7] = integer(static_cast<long long>(*m->stats->event_count));
      }
      profile_cells(m, d[9], d[10], d[11]);
      b.devices.rows.push_back(std::move(d));
    };
    // "aggregate" sorts among appliance names; keep the global (household,
    // name) order for device ids.
    std::map<std::string, std::pair<bool, const profiles::MeterProfiles*>> devices;
    if (r.aggregate) devices["aggregate"] = {true, agg};
    for (const auto& [app, _] : r.appliances) {
      const profiles::MeterProfiles* m = nullptr;
      if (hp) {
        if (auto it = hp->appliances.find(app); it != hp->appliances.end()) m = &it->second;
      }
      devices[app] = {false, m};
    }
    for (const auto& [dev, v] : devices) add_device(dev, v.first, v.second);
  }
  b.validate();
  return b;
}

// ---------------------------------------------------------------------------
// Export / import

std::string table_csv(const Table& t) {
  std::string out;
  std::vector<std::string> fields;
  for (const auto& c : t.columns) fields.push_back(c.name);
  append_csv_record(out, fields);
  for (const Row& row : t.rows) {
    fields.clear();
    for (const Cell& c : row) fields.push_back(c.value_or(""));
    append_csv_record(out, fields);
  }
  return out;
}

json schema_manifest(const StagingBundle& b) {
  json tables = json::array();
  for (const Table* t : b.tables()) {
    json cols = json::array();
    for (const auto& c : t->columns) {
      cols.push_back({{"name", c.name}, {"type", to_string(c.type)}, {"nullable", c.nullable}});
    }
    json fks = json::array();
    for (const auto& fk : t->foreign_keys) {
      fks.push_back({{"column", fk.column}, {"references", fk.ref_table + "." + fk.ref_column}});
    }
    tables.push_back({{"name", t->name}, {"file", t->name + ".csv"}, {"columns", cols},
                      {"primary_key", t->primary_key}, {"foreign_keys", fks},
                      {"rows", t->rows.size()}});
  }
  return {{"format", "elkg-staging"}, {"version", 1}, {"null_encoding", "empty field"},
          {"tables", tables}};
}

std::string schema_sql(const StagingBundle& b) {
  std::string out;
  // Referenced tables first so the script runs top to bottom.
  for (const Table* t : {&b.locations, &b.households, &b.devices}) {
    out += "CREATE TABLE " + t->name + " (\n";
    for (const auto& c : t->columns) {
      std::string type;
      switch (c.type) {
        case ColumnType::string: type = "TEXT"; break;
        case ColumnType::integer: type = "BIGINT"; break;
        case ColumnType::decimal: type = "DOUBLE PRECISION"; break;
        case ColumnType::boolean: type = "BOOLEAN"; break;
      }
      out += "  " + c.name + " " + type + (c.nullable ? "" : " NOT NULL") + ",\n";
    }
    out += "  PRIMARY KEY (" + t->primary_key + ")";
    for (const auto& fk : t->foreign_keys) {
      out += ",\n  FOREIGN KEY (" + fk.column + ") REFERENCES " + fk.ref_table + " (" +
             fk.ref_column + ")";
    }
    out += "\n);\n\n";
  }
  return out;
}

void export_staging(const StagingBundle& b, const fs::path& dir) {
  b.validate();
  for (const Table* t : b.tables()) write_file(dir / (t->name + ".csv"), table_csv(*t));
  write_file(dir / "schema.json", schema_manifest(b).dump(2) + "\n");
  write_file(dir / "schema.sql", schema_sql(b));
}

StagingBundle import_staging(const fs::path& dir) {
  const fs::path manifest_path = dir / "schema.json";
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string(), e.what());
  }
  StagingBundle b = StagingBundle::empty();
  if (schema_manifest(b)["tables"].size() != manifest.value("tables", json::array()).size()) {
    throw FormatError(manifest_path.string(), "unexpected table list");
  }
  for (Table* t : {&b.households, &b.locations, &b.devices}) {
    const fs::path path = dir / (t->name + ".csv");
    const json* entry = nullptr;
    for (const auto& e : manifest["tables"]) {
      if (e.value("name", "") == t->name) entry = &e;
    }
    if (!entry) throw FormatError(manifest_path.string(), "missing table " + t->name);
    std::vector<std::string> expected;
    for (const auto& c : t->columns) expected.push_back(c.name);
    std::vector<std::string> declared;
    for (const auto& c : entry->at("columns")) declared.push_back(c.at("name").get<std::string>());
    if (declared != expected) {
      throw FormatError(manifest_path.string(), "column list of " + t->name + " differs from schema");
    }
    CsvReader reader(read_file(path));
    std::vector<std::string> f;
    if (!reader.next(f) || f != expected) throw FormatError(path.string(), "header mismatch");
    while (reader.next(f)) {
      if (f.size() != expected.size()) {
        throw FormatError(path.string(), "line " + std::to_string(reader.line()) +
                                             ": expected " + std::to_string(expected.size()) +
                                             " fields");
      }
      Row row;
      row.reserve(f.size());
      for (auto& v : f) row.push_back(v.empty() ? std::nullopt : Cell(std::move(v)));
      t->rows.push_back(std::move(row));
    }
  }
  b.validate();
  return b;
}

}  // namespace elkg::staging
