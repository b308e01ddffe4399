#include "elkg/linker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "elkg/enrich.hpp"
#include "elkg/error.hpp"
#include "elkg/kgstore.hpp"
#include "elkg/text.hpp"

namespace elkg::linker {

using nlohmann::json;
using rdf::Term;

namespace {

constexpr const char* kWikidataCountry = R"(PREFIX wd: <http://www.wikidata.org/entity/>
PREFIX wdt: <http://www.wikidata.org/prop/direct/>
PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
SELECT DISTINCT ?item WHERE {
  ?item wdt:P31 wd:Q6256 ;
        rdfs:label "{name}"@en .
}
)";

constexpr const char* kWikidataSettlements = R"(PREFIX wd: <http://www.wikidata.org/entity/>
PREFIX wdt: <http://www.wikidata.org/prop/direct/>
PREFIX p: <http://www.wikidata.org/prop/>
PREFIX psv: <http://www.wikidata.org/prop/statement/value/>
PREFIX wikibase: <http://wikiba.se/ontology#>
PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
SELECT DISTINCT ?item ?label ?lat ?lon WHERE {
  ?item wdt:P31 wd:Q515 ;
        rdfs:label ?label ;
        p:P625 ?st .
  ?st psv:P625 ?coord .
  ?coord wikibase:geoLatitude ?lat ;
         wikibase:geoLongitude ?lon .
  FILTER(LANG(?label) = "en")
  FILTER(?lat >= {lat_min} && ?lat <= {lat_max} && ?lon >= {lon_min} && ?lon <= {lon_max})
}
)";

constexpr const char* kDbpediaCountry = R"(PREFIX dbo: <http://dbpedia.org/ontology/>
PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
SELECT DISTINCT ?item WHERE {
  ?item a dbo:Country ;
        rdfs:label "{name}"@en .
}
)";

constexpr const char* kDbpediaSettlements = R"(PREFIX dbo: <http://dbpedia.org/ontology/>
PREFIX geo: <http://www.w3.org/2003/01/geo/wgs84_pos#>
PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
SELECT DISTINCT ?item ?label ?lat ?lon WHERE {
  ?item a dbo:Settlement ;
        rdfs:label ?label ;
        geo:lat ?lat ;
        geo:long ?lon .
  FILTER(LANG(?label) = "en")
  FILTER(?lat >= {lat_min} && ?lat <= {lat_max} && ?lon >= {lon_min} && ?lon <= {lon_max})
}
)";

std::vector<KnowledgeBase> default_knowledge_bases() {
  return {{"wikidata", kWikidataCountry, kWikidataSettlements},
          {"dbpedia", kDbpediaCountry, kDbpediaSettlements}};
}

std::vector<char32_t> code_points(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    if (i + static_cast<std::size_t>(len) > s.size()) len = 1;
    char32_t cp = len == 1 ? c : c & (0x7F >> len);
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

double indel_ratio(std::string_view a, std::string_view b) {
  const std::size_t total = code_points(a).size() + code_points(b).size();
  if (total == 0) return 0.0;
  return 100.0 * (1.0 - static_cast<double>(indel_distance(a, b)) / static_cast<double>(total));
}

std::vector<std::string> tokens(std::string_view processed) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < processed.size()) {
    const std::size_t j = std::min(processed.find(' ', i), processed.size());
    if (j > i) out.emplace_back(processed.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

std::string join(const std::set<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back(' ');
    out += p;
  }
  return out;
}

std::string concat(const std::string& a, const std::string& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return a + " " + b;
}

std::optional<double> numeric(const std::optional<Term>& t) {
  if (!t || !t->is_literal()) return std::nullopt;
  return parse_double(t->value);
}

}  // namespace

LinkerConfig LinkerConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("linker config must be an object");
  LinkerConfig c;
  c.knowledge_bases = default_knowledge_bases();
  for (const auto& [k, v] : j.items()) {
    if (k == "radius_km") {
      if (!v.is_number() || v.get<double>() < 0) throw ConfigError("radius_km must be >= 0");
      c.radius_km = v.get<double>();
    } else if (k == "threshold") {
      if (!v.is_number() || v.get<double>() < 0 || v.get<double>() > 100) {
        throw ConfigError("threshold must be in [0,100]");
      }
      c.threshold = v.get<double>();
    } else if (k == "knowledge_bases") {
      if (!v.is_array()) throw ConfigError("knowledge_bases must be an array");
      c.knowledge_bases.clear();
      for (const auto& kb : v) {
        if (!kb.is_object() || !kb.contains("name") || !kb["name"].is_string()) {
          throw ConfigError("knowledge base entries need a name");
        }
        KnowledgeBase out;
        out.name = kb["name"].get<std::string>();
        const auto defaults = default_knowledge_bases();
        auto d = std::find_if(defaults.begin(), defaults.end(),
                              [&](const KnowledgeBase& x) { return x.name == out.name; });
        if (d != defaults.end()) out = *d;
        if (kb.contains("country_query")) out.country_query = kb["country_query"].get<std::string>();
        if (kb.contains("settlement_query")) {
          out.settlement_query = kb["settlement_query"].get<std::string>();
        }
        if (out.country_query.empty() || out.settlement_query.empty()) {
          throw ConfigError("knowledge base '" + out.name + "' lacks query templates");
        }
        c.knowledge_bases.push_back(std::move(out));
      }
    } else if (k != "comment") {
      throw ConfigError("unknown linker key '" + k + "'");
    }
  }
  return c;
}

LinkerConfig LinkerConfig::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::exact_country: return "exact-country";
    case Method::exact_city: return "exact-city";
    case Method::fuzzy_city: return "fuzzy-city";
    case Method::nearest_fallback: return "nearest-fallback";
    case Method::no_match: return "no-match";
  }
  return "no-match";
}

std::string process_label(std::string_view s) {
  std::string out;
  bool space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    // Bytes >= 0x80 belong to non-ASCII letters and are kept; Latin-1
    // capitals (C3 80..C3 9E, bar the multiplication sign) are lowercased.
    const bool keep = std::isalnum(c) || c >= 0x80;
    if (!keep) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    if (c == 0xC3 && i + 1 < s.size()) {
      const auto n = static_cast<unsigned char>(s[i + 1]);
      out.push_back(static_cast<char>(c));
      out.push_back(static_cast<char>(n >= 0x80 && n <= 0x9E && n != 0x97 ? n + 0x20 : n));
      ++i;
      continue;
    }
    out.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
  }
  return out;
}

std::size_t indel_distance(std::string_view a, std::string_view b) {
  const auto x = code_points(a);
  const auto y = code_points(b);
  // Longest common subsequence, single row.
  std::vector<std::size_t> row(y.size() + 1, 0);
  for (std::size_t i = 1; i <= x.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = x[i - 1] == y[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return x.size() + y.size() - 2 * row[y.size()];
}

double token_set_ratio(std::string_view a, std::string_view b) {
  const auto ta = tokens(process_label(a));
  const auto tb = tokens(process_label(b));
  if (ta.empty() || tb.empty()) return 0.0;
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  std::set<std::string> common, only_a, only_b;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                        std::inserter(common, common.end()));
  std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(),
                      std::inserter(only_a, only_a.end()));
  std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(),
                      std::inserter(only_b, only_b.end()));
  const std::string t0 = join(common);
  const std::string t1 = concat(t0, join(only_a));
  const std::string t2 = concat(t0, join(only_b));
  // A subset relation between the token sets is a full match.
  if (!t0.empty() && (only_a.empty() || only_b.empty())) return 100.0;
  return std::max({indel_ratio(t0, t1), indel_ratio(t0, t2), indel_ratio(t1, t2)});
}

std::string escape_sparql_string(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fill_template(const std::string& tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tpl.size()) {
    const std::size_t open = tpl.find('{', i);
    if (open == std::string::npos) break;
    const std::size_t close = tpl.find('}', open);
    if (close == std::string::npos) break;
    const std::string key = tpl.substr(open + 1, close - open - 1);
    auto it = values.find(key);
    out.append(tpl, i, open - i);
    if (it == values.end()) {
      // Not a placeholder (e.g. the braces of a group pattern).
      out.push_back('{');
      i = open + 1;
      continue;
    }
    out += it->second;
    i = close + 1;
  }
  out.append(tpl, i, std::string::npos);
  return out;
}

LinkResult link_country(const std::string& local_iri, const std::string& name,
                        QueryEndpoint& endpoint, const KnowledgeBase& kb) {
  LinkResult r;
  r.local_iri = local_iri;
  r.kb = kb.name;
  const auto res =
      endpoint.select(fill_template(kb.country_query, {{"name", escape_sparql_string(name)}}));
  const auto col = std::find(res.vars.begin(), res.vars.end(), "item") - res.vars.begin();
  std::set<std::string> items;
  if (static_cast<std::size_t>(col) < res.vars.size()) {
    for (const auto& row : res.rows) {
      const auto& t = row[static_cast<std::size_t>(col)];
      if (t && t->is_iri()) items.insert(t->value);
    }
  }
  if (items.empty()) return r;
  r.external_iri = *items.begin();
  r.method = Method::exact_country;
  r.score = 100.0;
  r.label = name;
  r.ambiguous = items.size() > 1;
  return r;
}

std::vector<Settlement> settlements_within(double lat, double lon, double radius_km,
                                           QueryEndpoint& endpoint, const KnowledgeBase& kb) {
  // Degrees per km along a meridian; the longitude span widens with latitude
  // and covers the whole circle near the poles. A small pad keeps boundary
  // points that the exact distance test below admits.
  constexpr double kKmPerDegree = 6371.0088 * 3.14159265358979323846 / 180.0;
  constexpr double kPad = 1e-6;
  const double dlat = radius_km / kKmPerDegree + kPad;
  const double cos_lat = std::cos(std::min(89.9, std::abs(lat) + dlat) * 3.14159265358979323846 / 180.0);
  const double dlon = std::min(180.0, radius_km / (kKmPerDegree * cos_lat) + kPad);
  // A box crossing the antimeridian falls back to every longitude.
  const bool wraps = dlon >= 180.0 || lon - dlon < -180.0 || lon + dlon > 180.0;
  const double lon_min = wraps ? -180.0 : lon - dlon;
  const double lon_max = wraps ? 180.0 : lon + dlon;

  const auto res = endpoint.select(fill_template(
      kb.settlement_query, {{"lat_min", format_decimal(lat - dlat)},
                            {"lat_max", format_decimal(lat + dlat)},
                            {"lon_min", format_decimal(lon_min)},
                            {"lon_max", format_decimal(lon_max)}}));
  auto col = [&](const char* v) -> std::ptrdiff_t {
    auto it = std::find(res.vars.begin(), res.vars.end(), v);
    if (it == res.vars.end()) throw FormatError(kb.name, std::string("settlement query lacks ?") + v);
    return it - res.vars.begin();
  };
  const auto ci = col("item"), cl = col("label"), ca = col("lat"), co = col("lon");

  std::vector<std::tuple<double, std::string, std::string, Settlement>> found;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : res.rows) {
    const auto& item = row[static_cast<std::size_t>(ci)];
    const auto& label = row[static_cast<std::size_t>(cl)];
    const auto la = numeric(row[static_cast<std::size_t>(ca)]);
    const auto lo = numeric(row[static_cast<std::size_t>(co)]);
    if (!item || !item->is_iri() || !label || !la || !lo) continue;
    const double d = enrich::haversine_km(lat, lon, *la, *lo);
    if (d > radius_km) continue;
    if (!seen.insert({item->value, label->value}).second) continue;
    found.emplace_back(d, item->value, label->value, Settlement{label->value, item->value, *la, *lo});
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
  });
  std::vector<Settlement> out;
  out.reserve(found.size());
  for (auto& f : found) out.push_back(std::move(std::get<3>(f)));
  return out;
}

std::optional<Choice> select_candidate(const std::vector<double>& scores,
                                       const std::vector<double>& distances, double threshold) {
  if (distances.empty()) return std::nullopt;
  if (!scores.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] > scores[best] || (scores[i] == scores[best] && distances[i] < distances[best])) {
        best = i;
      }
    }
    if (scores[best] >= threshold) return Choice{best, true};
  }
  std::size_t nearest = 0;
  for (std::size_t i = 1; i < distances.size(); ++i) {
    if (distances[i] < distances[nearest]) nearest = i;
  }
  return Choice{nearest, false};
}

CityMatch match_city(const std::optional<std::string>& city_name, double lat, double lon,
                     const std::vector<Settlement>& candidates, double threshold) {
  CityMatch m;
  std::vector<double> scores, distances;
  for (const auto& c : candidates) {
    distances.push_back(enrich::haversine_km(lat, lon, c.lat, c.lon));
    if (city_name) scores.push_back(token_set_ratio(*city_name, c.label));
  }
  const auto choice = select_candidate(scores, distances, threshold);
  if (!choice) return m;
  const Settlement& s = candidates[choice->index];
  m.settlement = s;
  if (choice->by_similarity) {
    m.score = scores[choice->index];
    m.method = process_label(*city_name) == process_label(s.label) ? Method::exact_city
                                                                   : Method::fuzzy_city;
    std::set<std::string> rivals;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (scores[i] == scores[choice->index] && distances[i] == distances[choice->index]) {
        rivals.insert(candidates[i].iri);
      }
    }
    m.ambiguous = rivals.size() > 1;
  } else {
    m.method = Method::nearest_fallback;
    m.score = distances[choice->index];
  }
  return m;
}

std::vector<rdf::Triple> emit_sameas(const std::vector<LinkResult>& links) {
  std::vector<rdf::Triple> out;
  for (const auto& l : links) {
    if (!l.external_iri) continue;
    out.push_back({Term::iri(l.local_iri), Term::iri(rdf::owl_same_as()), Term::iri(*l.external_iri)});
  }
  return out;
}

json link_report(const std::vector<LinkResult>& links) {
  json arr = json::array();
  for (const auto& l : links) {
    json j{{"local", l.local_iri},
           {"kb", l.kb},
           {"method", std::string(to_string(l.method))},
           {"ambiguous", l.ambiguous}};
    j["external"] = l.external_iri ? json(*l.external_iri) : json(nullptr);
    j["score"] = l.score ? json(*l.score) : json(nullptr);
    j["label"] = l.label;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace elkg::linker
