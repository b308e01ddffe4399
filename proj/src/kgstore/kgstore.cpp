#include "elkg/kgstore.hpp"

#include <algorithm>

#include "elkg/error.hpp"

namespace elkg::kgstore {

using nlohmann::json;
using rdf::Term;
using rdf::Triple;

namespace vocab {
std::string house() { return std::string(rdf::ns::schema) + "House"; }
std::string place() { return std::string(rdf::ns::schema) + "Place"; }
std::string city() { return std::string(rdf::ns::schema) + "City"; }
std::string country() { return std::string(rdf::ns::schema) + "Country"; }
std::string continent() { return std::string(rdf::ns::schema) + "Continent"; }
std::string device() { return std::string(rdf::ns::saref) + "Device"; }
std::string name() { return std::string(rdf::ns::schema) + "name"; }
std::string installed_in() { return std::string(rdf::ns::voc) + "installedIn"; }
std::string is_submetered() { return std::string(rdf::ns::voc) + "isSubmetered"; }
std::string is_predicted() { return std::string(rdf::ns::voc) + "isPredicted"; }
std::string is_aggregate() { return std::string(rdf::ns::voc) + "isAggregate"; }
}  // namespace vocab

std::string ResourceIris::household(const std::string& dataset, const std::string& household) const {
  return base + rdf::percent_encode(dataset + "_" + household);
}

std::string ResourceIris::device(const std::string& dataset, const std::string& household,
                                 const std::string& device) const {
  return this->household(dataset, household) + "/device/" + rdf::percent_encode(device);
}

std::string ResourceIris::city(const std::string& country, const std::string& city) const {
  return base + "city/" + rdf::percent_encode(country) + "_" + rdf::percent_encode(city);
}

std::string ResourceIris::country(const std::string& country) const {
  return base + "country/" + rdf::percent_encode(country);
}

// ---------------------------------------------------------------------------
// Stats

std::map<std::string, std::string> default_external_bases() {
  return {{"wikidata", "http://www.wikidata.org/entity/"},
          {"dbpedia", "http://dbpedia.org/resource/"}};
}

namespace {
Term boolean(bool v) { return Term::literal(v ? "true" : "false", rdf::xsd("boolean")); }
}  // namespace

StatsReport kg_stats(const TripleStore& store, const std::map<std::string, std::string>& bases) {
  StatsReport r;
  r.total_triples = store.size();
  r.unique_predicates = store.predicate_count();
  r.nodes = store.node_count();
  for (const auto& c : {vocab::house(), vocab::device(), vocab::city(), vocab::country(),
                        vocab::continent()}) {
    r.class_instances[c] = 0;
  }
  const Term type = Term::iri(rdf::rdf_type());
  std::map<Term, std::vector<std::string>> classes_of;
  std::set<Term> classes;
  for (const auto& t : store.match(std::nullopt, type, std::nullopt)) {
    ++r.class_instances[t.o.value];
    classes_of[t.s].push_back(t.o.value);
    classes.insert(t.o);
  }
  r.unique_classes = classes.size();

  const auto aggregates =
      store.match(std::nullopt, Term::iri(vocab::is_aggregate()), boolean(true));
  std::set<Term> aggregate_subjects;
  for (const auto& t : aggregates) aggregate_subjects.insert(t.s);
  for (const auto& t : store.match(std::nullopt, type, Term::iri(vocab::device()))) {
    if (!aggregate_subjects.count(t.s)) ++r.appliance_devices;
  }

  std::set<std::tuple<std::string, std::string, Term>> linked;
  for (const auto& t : store.match(std::nullopt, Term::iri(rdf::owl_same_as()), std::nullopt)) {
    if (!t.o.is_iri()) continue;
    for (const auto& [name, prefix] : bases) {
      if (t.o.value.rfind(prefix, 0) != 0) continue;
      auto it = classes_of.find(t.s);
      if (it == classes_of.end()) continue;
      for (const auto& c : it->second) linked.insert({c, name, t.s});
    }
  }
  for (const auto& [c, base, _] : linked) ++r.same_as[c][base];
  return r;
}

json to_json(const StatsReport& r) {
  json j;
  j["total_triples"] = r.total_triples;
  j["unique_predicates"] = r.unique_predicates;
  j["nodes"] = r.nodes;
  j["unique_classes"] = r.unique_classes;
  j["class_instances"] = r.class_instances;
  j["appliance_devices"] = r.appliance_devices;
  j["same_as"] = r.same_as;
  return j;
}

// ---------------------------------------------------------------------------
// Predictions

Predictions predictions_from_json(const json& j, const std::vector<std::string>* classes) {
  auto fail = [](const std::string& what) -> void { throw FormatError("predictions", what); };
  if (!j.is_object()) fail("document must be an object");
  for (const char* k : {"dataset", "household", "model_version"}) {
    if (!j.contains(k) || !j[k].is_string() || j[k].get<std::string>().empty()) {
      fail(std::string("'") + k + "' must be a non-empty string");
    }
  }
  if (!j.contains("threshold") || !j["threshold"].is_number()) fail("'threshold' must be a number");
  if (!j.contains("probabilities") || !j["probabilities"].is_object()) {
    fail("'probabilities' must be an object");
  }
  if (!j.contains("present") || !j["present"].is_array()) fail("'present' must be an array");
  for (const auto& [k, _] : j.items()) {
    static const std::set<std::string> allowed{"dataset", "household", "model_version",
                                               "threshold", "probabilities", "present",
                                               "windows"};
    if (!allowed.count(k)) fail("unknown key '" + k + "'");
  }
  Predictions p;
  p.dataset = j["dataset"].get<std::string>();
  p.household = j["household"].get<std::string>();
  p.model_version = j["model_version"].get<std::string>();
  p.threshold = j["threshold"].get<double>();
  if (!(p.threshold >= 0.0 && p.threshold <= 1.0)) fail("threshold outside [0,1]");
  for (const auto& [k, v] : j["probabilities"].items()) {
    if (!v.is_number()) fail("probability of '" + k + "' is not a number");
    const double prob = v.get<double>();
    if (!(prob >= 0.0 && prob <= 1.0)) fail("probability of '" + k + "' outside [0,1]");
    p.probabilities[k] = prob;
  }
  std::set<std::string> seen;
  for (const auto& v : j["present"]) {
    if (!v.is_string() || v.get<std::string>().empty()) fail("'present' entries must be non-empty strings");
    const std::string name = v.get<std::string>();
    if (!seen.insert(name).second) fail("duplicate present entry '" + name + "'");
    p.present.push_back(name);
  }
  if (!p.probabilities.empty()) {
    std::set<std::string> above;
    for (const auto& [k, prob] : p.probabilities) {
      if (prob > p.threshold) above.insert(k);
    }
    if (above != seen) fail("'present' does not equal the classes above the threshold");
  }
  if (classes) {
    const std::set<std::string> known(classes->begin(), classes->end());
    for (const auto& name : seen) {
      if (!known.count(name)) fail("unknown class '" + name + "'");
    }
    for (const auto& [k, _] : p.probabilities) {
      if (!known.count(k)) fail("unknown class '" + k + "'");
    }
  }
  return p;
}

json to_json(const Predictions& p) {
  return {{"dataset", p.dataset},     {"household", p.household},
          {"model_version", p.model_version}, {"threshold", p.threshold},
          {"probabilities", p.probabilities}, {"present", p.present}};
}

std::vector<Triple> prediction_triples(const Predictions& p, const ResourceIris& iris) {
  const Term house = Term::iri(iris.household(p.dataset, p.household));
  std::vector<Triple> out;
  out.push_back({house, Term::iri(vocab::is_submetered()), boolean(false)});
  for (const auto& name : p.present) {
    const Term dev = Term::iri(iris.device(p.dataset, p.household, name));
    out.push_back({dev, Term::iri(rdf::rdf_type()), Term::iri(vocab::device())});
    out.push_back({dev, Term::iri(vocab::name()), Term::literal(name)});
    out.push_back({dev, Term::iri(vocab::installed_in()), house});
    out.push_back({dev, Term::iri(vocab::is_predicted()), boolean(true)});
  }
  return out;
}

IngestReport ingest_predictions(const Predictions& p, TripleStore& store,
                                const std::set<std::string>& guard, const ResourceIris& iris) {
  IngestReport r;
  r.household_iri = iris.household(p.dataset, p.household);
  const Term house = Term::iri(r.household_iri);
  if (guard.count(r.household_iri)) {
    throw IntegrityError("refusing predictions for ground-truth submetered household " +
                         r.household_iri);
  }
  if (!store.contains({house, Term::iri(rdf::rdf_type()), Term::iri(vocab::house())})) {
    throw IntegrityError("unknown household: " + r.household_iri);
  }
  if (store.contains({house, Term::iri(vocab::is_submetered()), boolean(true)})) {
    throw IntegrityError("refusing predictions for submetered household " + r.household_iri);
  }
  const auto triples = prediction_triples(p, iris);
  r.devices = p.present.size();
  r.inserted = store.insert(triples);
  return r;
}

// ---------------------------------------------------------------------------
// Remote

sparql::Results remote_query(sparql::SparqlClient& client, const std::string& query) {
  return client.select(query);
}

std::string insert_data_update(const std::vector<Triple>& triples) {
  std::string u = "INSERT DATA {\n";
  for (const auto& t : triples) {
    u += rdf::to_ntriples(t);
    u.push_back('\n');
  }
  u += "}\n";
  return u;
}

void remote_insert(sparql::SparqlClient& client, const std::vector<Triple>& triples,
                   std::size_t batch) {
  batch = std::max<std::size_t>(1, batch);
  for (std::size_t i = 0; i < triples.size(); i += batch) {
    const std::size_t end = std::min(triples.size(), i + batch);
    client.update(insert_data_update(
        std::vector<Triple>(triples.begin() + static_cast<std::ptrdiff_t>(i),
                            triples.begin() + static_cast<std::ptrdiff_t>(end))));
  }
}

}  // namespace elkg::kgstore
