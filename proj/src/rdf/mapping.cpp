#include "elkg/mapping.hpp"

#include "elkg/error.hpp"
#include "elkg/text.hpp"

namespace elkg::rdfmap {

using nlohmann::json;

std::optional<std::string> Template::expand(const staging::Row& row) const {
  std::string out;
  for (const Part& p : parts) {
    if (!p.is_column) {
      out += p.text;
      continue;
    }
    const auto& cell = row[p.column];
    if (!cell) return std::nullopt;
    out += rdf::percent_encode(*cell);
  }
  return out;
}

namespace {

std::string ctx(const std::string& map, const std::string& table) {
  return "mapping '" + map + "' (table " + table + ")";
}

Template compile_template(const std::string& source, const rdf::PrefixMap& prefixes,
                          const staging::Table& table, const std::string& where) {
  std::string text = source;
  const std::size_t brace = text.find('{');
  const std::string head = text.substr(0, brace);
  if (head.find("://") == std::string::npos) {
    const std::size_t colon = head.find(':');
    if (colon == std::string::npos) {
      throw ConfigError(where + ": template '" + source + "' is neither absolute nor a CURIE");
    }
    const std::string prefix = head.substr(0, colon);
    auto it = prefixes.entries().find(prefix);
    if (it == prefixes.entries().end()) {
      throw ConfigError(where + ": undeclared prefix '" + prefix + "' in template '" + source + "'");
    }
    text = it->second + text.substr(colon + 1);
  }
  Template t;
  t.source = source;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string::npos) {
      t.parts.push_back({false, text.substr(pos)});
      break;
    }
    if (open > pos) t.parts.push_back({false, text.substr(pos, open - pos)});
    const std::size_t close = text.find('}', open);
    if (close == std::string::npos) {
      throw ConfigError(where + ": unterminated placeholder in template '" + source + "'");
    }
    const std::string column = text.substr(open + 1, close - open - 1);
    auto idx = table.column_index(column);
    if (!idx) {
      throw ConfigError(where + ": placeholder {" + column + "} names no column of table " +
                        table.name);
    }
    t.parts.push_back({true, column, *idx});
    pos = close + 1;
  }
  for (const Template::Part& p : t.parts) {
    if (!p.is_column && p.text.find('}') != std::string::npos) {
      throw ConfigError(where + ": stray '}' in template '" + source + "'");
    }
  }
  return t;
}

std::string expand_iri(const rdf::PrefixMap& prefixes, const std::string& curie,
                       const std::string& where, const char* what) {
  auto iri = prefixes.expand(curie);
  if (!iri || !rdf::is_absolute_iri(*iri)) {
    throw ConfigError(where + ": " + what + " '" + curie + "' does not resolve against the declared prefixes");
  }
  return *iri;
}

std::string default_datatype(staging::ColumnType t) {
  switch (t) {
    case staging::ColumnType::string: return rdf::xsd_string();
    case staging::ColumnType::integer: return rdf::xsd("integer");
    case staging::ColumnType::decimal: return rdf::xsd("decimal");
    case staging::ColumnType::boolean: return rdf::xsd("boolean");
  }
  return rdf::xsd_string();
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

}  // namespace

MappingPlan compile_mapping(const json& doc, const staging::StagingBundle& schema) {
  MappingPlan plan;
  if (!doc.is_object()) throw ConfigError("mapping document must be a JSON object");
  try {
    reject_unknown(doc, {"prefixes", "triples_maps", "comment"}, "mapping document");
    const json prefixes = doc.value("prefixes", json::object());
    for (const auto& [p, iri] : prefixes.items()) {
      plan.prefixes.add(p, iri.get<std::string>());
    }
    for (const auto& m : doc.value("triples_maps", json::array())) {
      TriplesMap tm;
      tm.name = m.at("name").get<std::string>();
      tm.table = m.at("logical_table").get<std::string>();
      const std::string where = ctx(tm.name, tm.table);
      reject_unknown(m, {"name", "logical_table", "subject", "classes", "predicate_object_maps",
                         "comment"},
                     where);
      const staging::Table* table = schema.table(tm.table);
      if (!table) throw ConfigError("mapping '" + tm.name + "': unknown table " + tm.table);
      tm.subject = compile_template(m.at("subject").get<std::string>(), plan.prefixes, *table, where);
      for (const auto& c : m.value("classes", json::array())) {
        tm.classes.push_back(expand_iri(plan.prefixes, c.get<std::string>(), where, "class"));
      }
      for (const auto& pom : m.value("predicate_object_maps", json::array())) {
        reject_unknown(pom, {"predicate", "column", "datatype", "language", "template", "comment"},
                       where);
        ObjectMap om;
        om.predicate = expand_iri(plan.prefixes, pom.at("predicate").get<std::string>(), where,
                                  "predicate");
        const bool has_col = pom.contains("column");
        const bool has_tpl = pom.contains("template");
        if (has_col == has_tpl) {
          throw ConfigError(where + ": predicate " + om.predicate +
                            " needs exactly one of 'column' or 'template'");
        }
        if (has_col) {
          om.column_name = pom["column"].get<std::string>();
          auto idx = table->column_index(om.column_name);
          if (!idx) {
            throw ConfigError(where + ": column '" + om.column_name + "' not in table " + tm.table);
          }
          om.column = *idx;
          om.language = pom.value("language", "");
          if (!om.language.empty()) {
            if (pom.contains("datatype")) {
              throw ConfigError(where + ": column '" + om.column_name +
                                "' has both datatype and language");
            }
          } else if (pom.contains("datatype")) {
            om.datatype = expand_iri(plan.prefixes, pom["datatype"].get<std::string>(), where,
                                     "datatype");
          } else {
            om.datatype = default_datatype(table->columns[*idx].type);
          }
        } else {
          if (pom.contains("datatype") || pom.contains("language")) {
            throw ConfigError(where + ": template object maps produce IRIs; datatype/language not allowed");
          }
          om.iri_template = compile_template(pom["template"].get<std::string>(), plan.prefixes,
                                             *table, where);
        }
        tm.objects.push_back(std::move(om));
      }
      plan.maps.push_back(std::move(tm));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("mapping document: ") + e.what());
  }
  return plan;
}

MappingPlan load_mapping(const std::filesystem::path& path, const staging::StagingBundle& schema) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return compile_mapping(doc, schema);
}

MappingResult apply_mapping(const MappingPlan& plan, const staging::StagingBundle& bundle) {
  MappingResult result;
  const rdf::Term type = rdf::Term::iri(rdf::rdf_type());
  for (const TriplesMap& tm : plan.maps) {
    const staging::Table* table = bundle.table(tm.table);
    if (!table) throw ConfigError("mapping '" + tm.name + "': bundle lacks table " + tm.table);
    for (std::size_t r = 0; r < table->rows.size(); ++r) {
      const staging::Row& row = table->rows[r];
      if (row.size() != table->columns.size()) {
        throw IntegrityError(tm.table + " row " + std::to_string(r + 1) + ": wrong column count");
      }
      auto subject = tm.subject.expand(row);
      if (!subject) continue;
      if (!rdf::is_absolute_iri(*subject)) {
        result.issues.push_back({tm.name, r + 1, "invalid subject IRI '" + *subject + "'"});
        continue;
      }
      std::vector<rdf::Triple> produced;
      bool bad = false;
      const rdf::Term s = rdf::Term::iri(*subject);
      for (const auto& c : tm.classes) produced.push_back({s, type, rdf::Term::iri(c)});
      for (const ObjectMap& om : tm.objects) {
        const rdf::Term p = rdf::Term::iri(om.predicate);
        if (om.column) {
          const auto& cell = row[*om.column];
          if (!cell || cell->empty()) continue;
          produced.push_back({s, p, om.language.empty()
                                        ? rdf::Term::literal(*cell, om.datatype)
                                        : rdf::Term::lang_literal(*cell, om.language)});
        } else {
          auto iri = om.iri_template->expand(row);
          if (!iri) continue;
          if (!rdf::is_absolute_iri(*iri)) {
            result.issues.push_back({tm.name, r + 1, "invalid object IRI '" + *iri + "'"});
            bad = true;
            break;
          }
          produced.push_back({s, p, rdf::Term::iri(*iri)});
        }
      }
      if (!bad) result.triples.insert(produced.begin(), produced.end());
    }
  }
  return result;
}

}  // namespace elkg::rdfmap
