#include "support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <openssl/evp.h>

#include <json.hpp>

#include "elkg/text.hpp"
#include "elkg/time.hpp"

namespace elkg::test {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path source_dir() { return fs::path(ELKG_SOURCE_DIR); }

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "elkg-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

TimeSeries make_series(Millis start, Millis step, const std::vector<double>& watts) {
  TimeSeries s;
  s.reserve(watts.size());
  for (std::size_t i = 0; i < watts.size(); ++i) {
    s.push_back(start + static_cast<Millis>(i) * step, watts[i]);
  }
  return s;
}

const harmonize::SynonymMap& shipped_synonyms() {
  static const harmonize::SynonymMap map =
      harmonize::SynonymMap::load(source_dir() / "config" / "synonyms.json");
  return map;
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

// ---------------------------------------------------------------------------
// Fixture world

namespace {

constexpr long long kStart = 1677628800;  // 2023-03-01T00:00:00Z
constexpr long long kSpan = 2 * 86400;

std::string two_digits(unsigned v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u", v);
  return buf;
}

// "YYYY-MM-DD HH:MM:SS" of a UTC second shifted by a fixed offset.
std::string civil_text(long long utc_s, long long offset_s) {
  const long long local = utc_s + offset_s;
  const long long day = floor_div(local, 86400);
  const long long sod = local - day * 86400;
  const CivilDate d = civil_from_days(day);
  return std::to_string(d.year) + "-" + two_digits(d.month) + "-" + two_digits(d.day) + " " +
         two_digits(static_cast<unsigned>(sod / 3600)) + ":" +
         two_digits(static_cast<unsigned>(sod / 60 % 60)) + ":" +
         two_digits(static_cast<unsigned>(sod % 60));
}

double fridge(long long s) { return (s / 60) % 60 < 20 ? 90.0 + static_cast<double>(s % 7) : 2.0; }
double kettle(long long s) { return s % 14400 < 180 ? 2000.0 : 0.0; }
double tv(long long s) { return (s / 3600) % 24 >= 18 ? 80.0 : 1.0; }
double washer(long long s) { return s % 43200 < 3600 ? 500.0 : 0.0; }
double dishwasher(long long s) { return s % 21600 < 5400 ? 1200.0 : 0.0; }

void write_appliance_file(const fs::path& path, long long period, double (*fn)(long long),
                          double offset = 0.0) {
  std::string out = "timestamp,power\n";
  for (long long s = 0; s < kSpan; s += period) {
    out += std::to_string(kStart + s) + "," + format_decimal(fn(s) + offset) + "\n";
  }
  write_file(path, out);
}

void write_raw(const fs::path& raw) {
  // FIXA: one directory per household, one file per meter.
  const fs::path a = raw / "FIXA";
  fs::create_directories(a / "house_1");
  fs::create_directories(a / "house_2");
  write_appliance_file(a / "house_1" / "fridge.csv", 8, fridge);
  write_appliance_file(a / "house_1" / "kettle.csv", 8, kettle);
  write_appliance_file(a / "house_1" / "plug_3.csv", 8, [](long long) { return 10.0; });
  write_appliance_file(a / "house_1" / "flux_capacitor.csv", 8, [](long long) { return 5.0; });
  write_appliance_file(a / "house_1" / "aggregate.csv", 8,
                       [](long long s) { return fridge(s) + kettle(s) + 15.0 + 150.0; });
  write_appliance_file(a / "house_2" / "washing_machine.csv", 8, washer);
  write_appliance_file(a / "house_2" / "tv.csv", 8, tv);
  write_appliance_file(a / "house_2" / "mains.csv", 8,
                       [](long long s) { return washer(s) + tv(s) + 120.0; });
  write_file(a / "meta.csv",
             "household,lat,lon,city,house_size,occupants\n"
             "house_1,51.5072,-0.1276,London,120,3\n"
             "house_2,51.5101,-0.1201,London,85.5,2\n");

  // FIXB: one wide file per household, local time, kW.
  const fs::path b = raw / "FIXB";
  fs::create_directories(b);
  for (const auto& [name, col, base] :
       {std::tuple{"b1", "aggregate", 0.3}, std::tuple{"b2", "mains", 0.45}}) {
    std::string out = std::string("time,") + col + "\n";
    for (long long s = 0; s < kSpan; s += 60) {
      const long long hour = (s / 3600) % 24;
      const double kw = base + (hour >= 7 && hour <= 9 ? 0.2 : 0.0);
      out += civil_text(kStart + s, 3600) + "," + format_decimal(kw) + "\n";
    }
    write_file(b / (std::string(name) + ".csv"), out);
  }

  // FIXC: one file for all households; c2 has no sub-meter readings.
  const fs::path c = raw / "FIXC";
  fs::create_directories(c);
  std::string out = "household,timestamp,aggregate,dishwasher\n";
  for (const char* house : {"c1", "c2"}) {
    for (long long s = 0; s < kSpan; s += 6) {
      const std::string ts = format_rfc3339((kStart + s) * 1000);
      if (std::string(house) == "c1") {
        const double dw = dishwasher(s);
        out += std::string(house) + "," + ts + "," +
               format_decimal(dw + 200.0 + static_cast<double>((s / 600) % 5) * 20.0) + "," +
               format_decimal(dw) + "\n";
      } else {
        const long long hour = (s / 3600) % 24;
        const double w = 300.0 + (hour >= 17 && hour <= 22 ? 900.0 : 0.0) + fridge(s);
        out += std::string(house) + "," + ts + "," + format_decimal(w) + ",\n";
      }
    }
  }
  write_file(c / "data.csv", out);
}

void write_descriptors(const fs::path& dir) {
  fs::create_directories(dir);
  const json a = {{"name", "FIXA"},
                  {"layout", "one-file-per-appliance"},
                  {"timestamp_format", "unix_s"},
                  {"timezone", "Europe/London"},
                  {"sampling_period_s", 8},
                  {"value_column", "power"},
                  {"metadata_file", "meta.csv"},
                  {"submetered", true}};
  const json b = {{"name", "FIXB"},
                  {"layout", "one-file-per-house"},
                  {"timestamp_column", "time"},
                  {"timestamp_format", "%Y-%m-%d %H:%M:%S"},
                  {"timezone", "Europe/Berlin"},
                  {"unit", "kW"},
                  {"sampling_period_s", 60},
                  {"submetered", false}};
  const json c = {{"name", "FIXC"},
                  {"layout", "multi-house-file"},
                  {"timestamp_format", "rfc3339"},
                  {"timezone", "America/New_York"},
                  {"sampling_period_s", 6},
                  {"household_column", "household"},
                  {"submetered", json::array({"c1"})}};
  write_file(dir / "fixa.json", a.dump(2));
  write_file(dir / "fixb.json", b.dump(2));
  write_file(dir / "fixc.json", c.dump(2));
}

// --- knowledge-base fixtures -------------------------------------------------

struct Place {
  const char* wikidata;
  const char* dbpedia;
  const char* label;
  double lat;
  double lon;
};

constexpr Place kSettlements[] = {
    {"Q84", "London", "London", 51.507222, -0.1275},
    {"Q208257", "Croydon", "Croydon", 51.3762, -0.0982},
    {"Q216638", "Watford", "Watford", 51.6565, -0.3903},
    {"Q161491", "Reading,_Berkshire", "Reading", 51.4543, -0.9781},
    {"Q64", "Berlin", "Berlin", 52.52, 13.405},
    {"Q1711", "Potsdam", "Potsdam", 52.4009, 13.0591},
    {"Q100", "Boston", "Boston", 42.3601, -71.0589},
    {"Q49111", "Cambridge,_Massachusetts", "Cambridge", 42.3736, -71.1097},
};

constexpr std::array<std::array<const char*, 3>, 3> kCountries = {{
    {"Q145", "United_Kingdom", "United Kingdom"},
    {"Q183", "Germany", "Germany"},
    {"Q30", "United_States", "United States"},
}};

std::string iri(const std::string& s) { return "<" + s + ">"; }
std::string lit_en(const std::string& s) { return "\"" + s + "\"@en"; }
std::string dbl(double v, const char* type) {
  return "\"" + format_decimal(v) + "\"^^<http://www.w3.org/2001/XMLSchema#" + type + ">";
}

const std::string kRdfsLabel = "<http://www.w3.org/2000/01/rdf-schema#label>";
const std::string kType = "<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>";

}  // namespace

std::string wikidata_fixture_nt() {
  const std::string wd = "http://www.wikidata.org/entity/";
  std::string out;
  auto line = [&](const std::string& s, const std::string& p, const std::string& o) {
    out += s + " " + p + " " + o + " .\n";
  };
  for (const auto& pl : kSettlements) {
    const std::string item = iri(wd + pl.wikidata);
    const std::string st = iri(wd + "statement/" + pl.wikidata + "-P625");
    const std::string val = iri("http://www.wikidata.org/value/" + std::string(pl.wikidata) + "-coord");
    line(item, "<http://www.wikidata.org/prop/direct/P31>", iri(wd + "Q515"));
    line(item, kRdfsLabel, lit_en(pl.label));
    line(item, kRdfsLabel, "\"" + std::string(pl.label) + "\"@de");
    line(item, "<http://www.wikidata.org/prop/P625>", st);
    line(st, "<http://www.wikidata.org/prop/statement/value/P625>", val);
    line(val, "<http://wikiba.se/ontology#geoLatitude>", dbl(pl.lat, "double"));
    line(val, "<http://wikiba.se/ontology#geoLongitude>", dbl(pl.lon, "double"));
  }
  for (const auto& c : kCountries) {
    line(iri(wd + c[0]), "<http://www.wikidata.org/prop/direct/P31>", iri(wd + "Q6256"));
    line(iri(wd + c[0]), kRdfsLabel, lit_en(c[2]));
  }
  return out;
}

std::string dbpedia_fixture_nt() {
  const std::string dbr = "http://dbpedia.org/resource/";
  std::string out;
  auto line = [&](const std::string& s, const std::string& p, const std::string& o) {
    out += s + " " + p + " " + o + " .\n";
  };
  for (const auto& pl : kSettlements) {
    const std::string item = iri(dbr + pl.dbpedia);
    line(item, kType, "<http://dbpedia.org/ontology/Settlement>");
    line(item, kRdfsLabel, lit_en(pl.label));
    line(item, "<http://www.w3.org/2003/01/geo/wgs84_pos#lat>", dbl(pl.lat, "float"));
    line(item, "<http://www.w3.org/2003/01/geo/wgs84_pos#long>", dbl(pl.lon, "float"));
  }
  for (const auto& c : kCountries) {
    line(iri(dbr + c[1]), kType, "<http://dbpedia.org/ontology/Country>");
    line(iri(dbr + c[1]), kRdfsLabel, lit_en(c[2]));
  }
  return out;
}

FixtureWorld write_fixture_world(const fs::path& root, std::size_t dataset_size) {
  FixtureWorld w;
  w.root = root;
  w.config = root / "pipeline.json";
  w.workdir = root / "work";
  w.raw_root = root / "raw";
  w.datasets_dir = root / "datasets";
  write_raw(w.raw_root);
  write_descriptors(w.datasets_dir);

  json geo = json::parse(read_file(source_dir() / "config" / "geo.json"));
  geo["datasets"] = {
      {"FIXA", {{"country", "United Kingdom"}}},
      {"FIXB", {{"country", "Germany"}, {"city", "Berlin"}, {"lat", 52.52}, {"lon", 13.405}}},
      {"FIXC", {{"country", "United States"}, {"city", "Boston"}, {"lat", 42.3601}, {"lon", -71.0589}}}};
  write_file(root / "geo.json", geo.dump(2));

  fs::create_directories(root / "kb");
  write_file(root / "kb" / "wikidata.nt", wikidata_fixture_nt());
  write_file(root / "kb" / "dbpedia.nt", dbpedia_fixture_nt());

  const fs::path cfg = source_dir() / "config";
  const json pipeline = {
      {"workdir", "work"},
      {"raw_root", "raw"},
      {"datasets_dir", "datasets"},
      {"synonyms", (cfg / "synonyms.json").string()},
      {"geo", "geo.json"},
      {"indicators_dir", (cfg / "indicators").string()},
      {"mapping", (cfg / "mapping.json").string()},
      {"threads", 2},
      {"linker",
       {{"endpoints",
         {{"wikidata", {{"fixture", "kb/wikidata.nt"}}}, {"dbpedia", {{"fixture", "kb/dbpedia.nt"}}}}}}},
      {"synth", {{"dataset_size", dataset_size}, {"seed", 7}}}};
  write_file(w.config, pipeline.dump(2));
  return w;
}

// ---------------------------------------------------------------------------
// N-Triples scanner

ScanStats scan_ntriples(const std::string& text) {
  std::set<std::string> lines, preds, nodes;
  std::map<std::string, std::set<std::string>> types_of;      // subject -> classes
  std::map<std::string, std::set<std::string>> instances;     // class -> subjects
  std::set<std::string> aggregates;
  std::vector<std::pair<std::string, std::string>> same;      // subject, object IRI
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!lines.insert(line).second) continue;
    // Subject and predicate are IRIs in pipeline output; the object is the
    // rest of the line before " .".
    const auto s_end = line.find("> ") + 1;
    const auto p_end = line.find("> ", s_end + 1) + 1;
    const std::string s = line.substr(0, s_end);
    const std::string p = line.substr(s_end + 1, p_end - s_end - 1);
    std::string o = line.substr(p_end + 1);
    o = o.substr(0, o.size() - 2);
    preds.insert(p);
    nodes.insert(s);
    nodes.insert(o);
    if (p == kType) {
      types_of[s].insert(o);
      instances[o].insert(s);
    }
    if (p == "<https://elkg.example.org/voc/isAggregate>" &&
        o == "\"true\"^^<http://www.w3.org/2001/XMLSchema#boolean>") {
      aggregates.insert(s);
    }
    if (p == "<http://www.w3.org/2002/07/owl#sameAs>") same.emplace_back(s, o);
  }
  ScanStats r;
  r.triples = lines.size();
  r.predicates = preds.size();
  r.nodes = nodes.size();
  for (const auto& [c, subjects] : instances) {
    r.class_instances[c.substr(1, c.size() - 2)] = subjects.size();
  }
  for (const auto& s : instances["<https://saref.etsi.org/core/Device>"]) {
    if (!aggregates.count(s)) ++r.appliance_devices;
  }
  std::set<std::tuple<std::string, std::string, std::string>> linked;
  const std::map<std::string, std::string> bases{{"wikidata", "<http://www.wikidata.org/entity/"},
                                                 {"dbpedia", "<http://dbpedia.org/resource/"}};
  for (const auto& [s, o] : same) {
    for (const auto& [name, prefix] : bases) {
      if (o.rfind(prefix, 0) != 0) continue;
      for (const auto& c : types_of[s]) linked.insert({c.substr(1, c.size() - 2), name, s});
    }
  }
  for (const auto& [c, base, _] : linked) ++r.same_as[c][base];
  return r;
}

// ---------------------------------------------------------------------------
// Oracles

double oracle_haversine_km(double lat1, double lon1, double lat2, double lon2) {
  const double r = 6371.0088;
  const double to_rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * to_rad;
  const double dlon = (lon2 - lon1) * to_rad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(lat1 * to_rad) * std::cos(lat2 * to_rad) * s2 * s2;
  return 2.0 * r * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

bool is_numeric_literal(const rdf::Term& t, double& v) {
  if (!t.is_literal()) return false;
  static const std::set<std::string> numeric{
      "http://www.w3.org/2001/XMLSchema#integer", "http://www.w3.org/2001/XMLSchema#decimal",
      "http://www.w3.org/2001/XMLSchema#double"};
  if (!numeric.count(t.datatype)) return false;
  char* end = nullptr;
  v = std::strtod(t.value.c_str(), &end);
  return end && *end == '\0' && !t.value.empty();
}

bool oracle_compare(const rdf::Term& a, sparql::CmpOp op, const rdf::Term& b) {
  using sparql::CmpOp;
  auto cmp = [op](auto x, auto y) {
    switch (op) {
      case CmpOp::eq: return x == y;
      case CmpOp::ne: return x != y;
      case CmpOp::lt: return x < y;
      case CmpOp::le: return x <= y;
      case CmpOp::gt: return x > y;
      case CmpOp::ge: return x >= y;
    }
    return false;
  };
  double x = 0, y = 0;
  if (is_numeric_literal(a, x) && is_numeric_literal(b, y)) return cmp(x, y);
  const std::string str = "http://www.w3.org/2001/XMLSchema#string";
  if (a.is_literal() && b.is_literal() && a.datatype == str && b.datatype == str && a.lang.empty() &&
      b.lang.empty()) {
    return cmp(a.value, b.value);
  }
  if (op == CmpOp::eq) return a == b;
  if (op == CmpOp::ne) return !(a == b);
  return false;
}

}  // namespace

sparql::Results naive_evaluate(const sparql::Query& q, const std::vector<rdf::Triple>& triples) {
  using Binding = std::map<std::string, rdf::Term>;
  std::vector<Binding> solutions{Binding{}};
  for (const auto& pat : q.patterns) {
    std::vector<Binding> next;
    for (const auto& b : solutions) {
      for (const auto& t : triples) {
        // Constants first, then variables; copy the binding only for matches.
        auto fixed_mismatch = [](const sparql::PatternTerm& pt, const rdf::Term& v) {
          const auto* term = std::get_if<rdf::Term>(&pt);
          return term && !(*term == v);
        };
        if (fixed_mismatch(pat.p, t.p) || fixed_mismatch(pat.s, t.s) || fixed_mismatch(pat.o, t.o)) {
          continue;
        }
        Binding added;
        bool ok = true;
        auto unify = [&](const sparql::PatternTerm& pt, const rdf::Term& v) {
          if (!ok) return;
          if (const auto* term = std::get_if<rdf::Term>(&pt)) {
            ok = *term == v;
            return;
          }
          const auto& name = std::get<sparql::Var>(pt).name;
          if (auto it = b.find(name); it != b.end()) {
            ok = it->second == v;
          } else if (auto jt = added.find(name); jt != added.end()) {
            ok = jt->second == v;
          } else {
            added.emplace(name, v);
          }
        };
        unify(pat.s, t.s);
        unify(pat.p, t.p);
        unify(pat.o, t.o);
        if (!ok) continue;
        Binding nb = b;
        nb.insert(added.begin(), added.end());
        next.push_back(std::move(nb));
      }
    }
    solutions = std::move(next);
  }
  auto operand = [](const sparql::Operand& op, const Binding& b) -> std::optional<rdf::Term> {
    if (op.kind == sparql::Operand::Kind::term) return op.term;
    auto it = b.find(op.var);
    if (it == b.end()) return std::nullopt;
    if (op.kind == sparql::Operand::Kind::lang) {
      if (!it->second.is_literal()) return std::nullopt;
      return rdf::Term::literal(it->second.lang);
    }
    return it->second;
  };
  sparql::Results r;
  r.vars = q.projection;
  for (const auto& b : solutions) {
    bool keep = true;
    for (const auto& f : q.filters) {
      for (const auto& c : f.all) {
        auto l = operand(c.lhs, b);
        auto rr = operand(c.rhs, b);
        if (!l || !rr || !oracle_compare(*l, c.op, *rr)) keep = false;
      }
    }
    if (!keep) continue;
    std::vector<std::optional<rdf::Term>> row;
    for (const auto& v : q.projection) {
      auto it = b.find(v);
      row.push_back(it == b.end() ? std::nullopt : std::optional<rdf::Term>(it->second));
    }
    r.rows.push_back(std::move(row));
  }
  std::sort(r.rows.begin(), r.rows.end());
  if (q.distinct) r.rows.erase(std::unique(r.rows.begin(), r.rows.end()), r.rows.end());
  if (q.limit && r.rows.size() > *q.limit) r.rows.resize(*q.limit);
  return r;
}

OracleProfiles oracle_profiles(const TimeSeries& s, Millis offset_ms, Millis period_ms,
                               double coverage_floor) {
  constexpr Millis kHourMs = 3'600'000;
  constexpr Millis kDayMs = 86'400'000;
  std::map<long long, double> hour_j;   // local hour -> joules
  std::map<long long, Millis> day_cov;  // local day -> covered ms
  for (std::size_t i = 0; i < s.size(); ++i) {
    Millis a = s.timestamps[i] + offset_ms;
    Millis end = a + period_ms;
    if (i + 1 < s.size()) end = std::min(end, s.timestamps[i + 1] + offset_ms);
    while (a < end) {
      const Millis hour = a >= 0 ? a / kHourMs : -((-a + kHourMs - 1) / kHourMs);
      const Millis b = std::min<Millis>(end, (hour + 1) * kHourMs);
      hour_j[hour] += s.watts[i] * static_cast<double>(b - a) / 1000.0;
      const long long day = hour >= 0 ? hour / 24 : -((-hour + 23) / 24);
      day_cov[day] += b - a;
      a = b;
    }
  }
  OracleProfiles r;
  r.daily.assign(24, std::nullopt);
  r.weekly.assign(7, std::nullopt);
  r.monthly.assign(31, std::nullopt);
  std::vector<double> dsum(24, 0), wsum(7, 0), msum(31, 0);
  std::vector<int> dn(24, 0), wn(7, 0), mn(31, 0);
  double total = 0;
  int days = 0;
  for (const auto& [day, cov] : day_cov) {
    if (static_cast<double>(cov) < coverage_floor * static_cast<double>(kDayMs)) continue;
    double dj = 0;
    for (int h = 0; h < 24; ++h) {
      auto it = hour_j.find(day * 24 + h);
      const double j = it == hour_j.end() ? 0.0 : it->second;
      dsum[h] += j;
      ++dn[h];
      dj += j;
    }
    // 1970-01-01 was a Thursday (index 3 with Monday = 0).
    const int wd = static_cast<int>(((day % 7) + 7 + 3) % 7);
    wsum[wd] += dj;
    ++wn[wd];
    const auto civil = civil_from_days(day);
    msum[civil.day - 1] += dj;
    ++mn[civil.day - 1];
    total += dj;
    ++days;
  }
  for (int h = 0; h < 24; ++h) if (dn[h]) r.daily[h] = dsum[h] / dn[h] / 3.6e6;
  for (int d = 0; d < 7; ++d) if (wn[d]) r.weekly[d] = wsum[d] / wn[d] / 3.6e6;
  for (int d = 0; d < 31; ++d) if (mn[d]) r.monthly[d] = msum[d] / mn[d] / 3.6e6;
  if (days > 0) r.avg_daily = total / days / 3.6e6;
  return r;
}

// ---------------------------------------------------------------------------
// Random knowledge graphs and queries

namespace {

constexpr int kKgPredicates = 8;
const std::vector<std::string>& kg_strings() {
  static const std::vector<std::string> v{"London", "Berlin", "Boston", "a", "b", "Zed", ""};
  return v;
}

rdf::Term kg_subject(std::size_t i) { return rdf::Term::iri("urn:s:" + std::to_string(i)); }
rdf::Term kg_predicate(int i) { return rdf::Term::iri("urn:p:" + std::to_string(i)); }

}  // namespace

std::vector<rdf::Triple> random_kg(std::mt19937_64& rng, std::size_t max_triples) {
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_triples)(rng);
  const std::size_t subjects = std::max<std::size_t>(5, n / 8);
  std::uniform_int_distribution<std::size_t> subj(0, subjects - 1);
  std::uniform_int_distribution<int> pred(0, kKgPredicates - 1);
  std::uniform_int_distribution<int> kind(0, 99);
  std::uniform_int_distribution<int> small(-20, 99);
  std::set<rdf::Triple> out;
  while (out.size() < n) {
    rdf::Term o;
    const int k = kind(rng);
    if (k < 45) o = kg_subject(subj(rng));
    else if (k < 65) o = rdf::Term::literal(std::to_string(small(rng)), rdf::xsd("integer"));
    else if (k < 75) o = rdf::Term::literal(std::to_string(small(rng)) + ".5", rdf::xsd("decimal"));
    else if (k < 80) o = rdf::Term::literal(std::to_string(small(rng)) + "e0", rdf::xsd("double"));
    else if (k < 93) o = rdf::Term::literal(kg_strings()[rng() % kg_strings().size()]);
    else o = rdf::Term::lang_literal(kg_strings()[rng() % 3], rng() % 2 ? "en" : "de");
    out.insert({kg_subject(subj(rng)), kg_predicate(pred(rng)), o});
  }
  std::vector<rdf::Triple> v(out.begin(), out.end());
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

std::string random_query(std::mt19937_64& rng) {
  auto chance = [&](int pct) { return std::uniform_int_distribution<int>(0, 99)(rng) < pct; };
  auto pick_pred = [&] {
    const int p = static_cast<int>(rng() % kKgPredicates);
    return chance(50) ? "ex:" + std::to_string(p) : "<urn:p:" + std::to_string(p) + ">";
  };
  auto number = [&] {
    const int v = std::uniform_int_distribution<int>(-20, 99)(rng);
    switch (rng() % 3) {
      case 0: return std::to_string(v);
      case 1: return std::to_string(v) + ".5";
      default: return std::to_string(v) + "e0";
    }
  };
  std::vector<std::string> vars{"?v0"};
  std::vector<std::string> object_vars;
  std::string where;
  const int patterns = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int i = 0; i < patterns; ++i) {
    const std::string fresh = "?v" + std::to_string(vars.size());
    std::string s = vars[rng() % vars.size()];
    if (i == 0 && chance(15)) s = "<urn:s:" + std::to_string(rng() % 20) + ">";
    std::string p = pick_pred();
    // A variable predicate only with a fixed subject or as the sole pattern.
    if (chance(10) && (patterns == 1 || s[0] == '<')) p = "?pv";
    std::string o = fresh;
    if (chance(15)) o = "<urn:s:" + std::to_string(rng() % 20) + ">";
    else if (chance(10)) o = "\"" + kg_strings()[rng() % kg_strings().size()] + "\"";
    else if (chance(10)) o = number();
    if (o == fresh) {
      vars.push_back(fresh);
      object_vars.push_back(fresh);
    }
    if (p == "?pv" && std::find(vars.begin(), vars.end(), p) == vars.end()) vars.push_back(p);
    where += "  " + s + " " + p + " " + o + " .\n";
  }
  std::string filters;
  if (!object_vars.empty() && chance(60)) {
    const int n = std::uniform_int_distribution<int>(1, 2)(rng);
    std::vector<std::string> parts;
    for (int i = 0; i < n; ++i) {
      static const char* ops[] = {"=", "!=", "<", "<=", ">", ">="};
      const std::string v = object_vars[rng() % object_vars.size()];
      const std::string op = ops[rng() % 6];
      switch (rng() % 4) {
        case 0: parts.push_back(v + " " + op + " " + number()); break;
        case 1: parts.push_back(v + " " + op + " \"" + kg_strings()[rng() % kg_strings().size()] + "\""); break;
        case 2: parts.push_back("LANG(" + v + ") " + op + " \"" + (chance(50) ? "en" : "") + "\""); break;
        default: parts.push_back(v + " " + op + " <urn:s:" + std::to_string(rng() % 20) + ">"); break;
      }
    }
    if (chance(50)) {
      std::string joined;
      for (const auto& part : parts) joined += (joined.empty() ? "" : " && ") + part;
      filters = "  FILTER(" + joined + ")\n";
    } else {
      for (const auto& part : parts) filters += "  FILTER (" + part + ")\n";
    }
  }
  std::string select = "SELECT ";
  if (chance(30)) select += "DISTINCT ";
  if (chance(30)) {
    select += "*";
  } else {
    std::string proj;
    for (const auto& v : vars) {
      if (chance(60)) proj += v + " ";
    }
    if (proj.empty()) proj = vars.back() + " ";
    select += proj;
  }
  std::string q = "PREFIX ex: <urn:p:>\n" + select + " WHERE {\n" + where + filters + "}";
  if (chance(30)) q += " LIMIT " + std::to_string(rng() % 20);
  return q + "\n";
}

staging::StagingBundle mapping_fixture_bundle() {
  auto b = staging::StagingBundle::empty();
  using staging::Cell;
  const Cell null;
  b.locations.rows.push_back({Cell("1"), Cell("London"), Cell("United Kingdom"), Cell("Europe"),
                              Cell("51.5072"), Cell("-0.1276"), Cell("46125"), null, null,
                              Cell("0.34"), null, Cell("5700"), Cell("11"), Cell("238")});
  b.households.rows.push_back({Cell("1"), Cell("FIXA_house_1"), Cell("FIXA"), Cell("house_1"),
                               Cell("Europe/London"), Cell("120"), Cell("3"), Cell("true"),
                               Cell("9.5"), Cell("2.261"), Cell("1"), Cell("0.1;0.2"), null, null,
                               null});
  b.households.rows.push_back({Cell("2"), Cell("FIXA_house 2"), Cell("FIXA"), Cell("house 2"),
                               Cell("Europe/London"), Cell("85.5"), null, Cell("false"), null,
                               null, Cell("1"), null, null, null, Cell("{\"note\":\"a,b\"}")});
  b.devices.rows.push_back({Cell("1"), Cell("1"), Cell("FIXA_house_1"), Cell("aggregate"),
                            Cell("true"), Cell("9.5"), null, null, Cell("false"), null, null,
                            null});
  b.devices.rows.push_back({Cell("2"), Cell("1"), Cell("FIXA_house_1"), Cell("kettle"),
                            Cell("false"), Cell("0.4"), Cell("0.1"), Cell("4"), Cell("false"),
                            null, null, null});
  b.devices.rows.push_back({Cell("3"), Cell("2"), Cell("FIXA_house 2"), Cell("television"),
                            Cell("false"), null, null, null, Cell("false"), null, null, null});
  return b;
}

}  // namespace elkg::test
