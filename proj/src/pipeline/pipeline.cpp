#include "elkg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <ostream>
#include <set>

#include "elkg/archive.hpp"
#include "elkg/enrich.hpp"
#include "elkg/harmonize.hpp"
#include "elkg/kgstore.hpp"
#include "elkg/mapping.hpp"
#include "elkg/parallel.hpp"
#include "elkg/sparql.hpp"
#include "elkg/staging.hpp"
#include "elkg/text.hpp"
#include "elkg/triple_store.hpp"

namespace elkg::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Stage names

namespace {
constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::harmonize, "harmonize"}, {Stage::profiles, "profiles"}, {Stage::enrich, "enrich"},
    {Stage::stage, "stage"},         {Stage::map, "map"},           {Stage::link, "link"},
    {Stage::load, "load"},           {Stage::stats, "stats"},       {Stage::query, "query"},
    {Stage::ml_prep, "ml-prep"},     {Stage::ml_ingest, "ml-ingest"},
};
}  // namespace

std::string_view to_string(Stage s) {
  for (const auto& [stage, name] : kStageNames) {
    if (stage == s) return name;
  }
  return "?";
}

Stage stage_from_string(std::string_view name) {
  for (const auto& [stage, n] : kStageNames) {
    if (n == name) return stage;
  }
  throw ConfigError("unknown subcommand '" + std::string(name) + "'");
}

std::vector<Stage> all_stages() {
  std::vector<Stage> out;
  for (const auto& [stage, _] : kStageNames) out.push_back(stage);
  return out;
}

// ---------------------------------------------------------------------------
// Config

namespace {

template <class T>
T get(const json& j, const std::string& section, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(section + "." + key + ": " + e.what());
  }
}

// get<unsigned> wraps negative numbers silently.
template <class T>
T get_count(const json& j, const std::string& section, const std::string& key) {
  if (!j.is_number_unsigned()) throw ConfigError(section + "." + key + " must be a non-negative integer");
  return get<T>(j, section, key);
}

fs::path resolve(const fs::path& base, const json& v, const std::string& key) {
  const fs::path p = get<std::string>(v, "config", key);
  return p.is_absolute() ? p : base / p;
}

void check_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(section + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + section);
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
  check_keys(j, "pipeline config",
             {"workdir", "raw_root", "datasets_dir", "synonyms", "geo", "indicators_dir", "mapping",
              "threads", "profiles", "linker", "store", "http", "synth", "comment"});
  PipelineConfig c;
  c.linker = linker::LinkerConfig::from_json(json::object());
  c.workdir = base_dir / c.workdir;
  c.raw_root = base_dir / c.raw_root;
  c.datasets_dir = base_dir / c.datasets_dir;
  c.synonyms = base_dir / c.synonyms;
  c.geo = base_dir / c.geo;
  c.indicators_dir = base_dir / c.indicators_dir;
  c.mapping = base_dir / c.mapping;
  c.linker.knowledge_bases = linker::LinkerConfig::from_json(json::object()).knowledge_bases;

  const std::pair<const char*, fs::path*> paths[] = {
      {"workdir", &c.workdir}, {"raw_root", &c.raw_root},   {"datasets_dir", &c.datasets_dir},
      {"synonyms", &c.synonyms}, {"geo", &c.geo},           {"indicators_dir", &c.indicators_dir},
      {"mapping", &c.mapping}};
  for (const auto& [key, dst] : paths) {
    if (j.contains(key)) *dst = resolve(base_dir, j[key], key);
  }
  if (j.contains("threads")) c.threads = get_count<unsigned>(j["threads"], "config", "threads");

  if (j.contains("profiles")) {
    const json& p = j["profiles"];
    check_keys(p, "profiles", {"coverage_floor", "event_on_w", "event_min_s", "event_min_gap_s"});
    if (p.contains("coverage_floor")) {
      c.profile.coverage_floor = get<double>(p["coverage_floor"], "profiles", "coverage_floor");
    }
    if (p.contains("event_on_w")) c.events.on_threshold_w = get<double>(p["event_on_w"], "profiles", "event_on_w");
    if (p.contains("event_min_s")) c.events.min_duration_s = get<double>(p["event_min_s"], "profiles", "event_min_s");
    if (p.contains("event_min_gap_s")) {
      c.events.min_gap_s = get<double>(p["event_min_gap_s"], "profiles", "event_min_gap_s");
    }
    if (!(c.profile.coverage_floor >= 0.0 && c.profile.coverage_floor <= 1.0)) {
      throw ConfigError("profiles.coverage_floor must be in [0,1]");
    }
  }

  if (j.contains("linker")) {
    json l = j["linker"];
    if (!l.is_object()) throw ConfigError("linker must be an object");
    if (l.contains("endpoints")) {
      const json& eps = l["endpoints"];
      if (!eps.is_object()) throw ConfigError("linker.endpoints must be an object");
      for (const auto& [name, spec] : eps.items()) {
        check_keys(spec, "linker.endpoints." + name, {"url", "fixture"});
        EndpointSpec e;
        if (spec.contains("url")) e.url = get<std::string>(spec["url"], "linker.endpoints", name);
        if (spec.contains("fixture")) e.fixture = resolve(base_dir, spec["fixture"], name);
        if (e.url.empty() == e.fixture.empty()) {
          throw ConfigError("linker.endpoints." + name + " needs exactly one of url, fixture");
        }
        c.kb_endpoints[name] = e;
      }
      l.erase("endpoints");
    }
    c.linker = linker::LinkerConfig::from_json(l);
  }

  if (j.contains("store")) {
    const json& s = j["store"];
    check_keys(s, "store", {"endpoint", "batch"});
    if (s.contains("endpoint")) c.store_endpoint = get<std::string>(s["endpoint"], "store", "endpoint");
    if (s.contains("batch")) c.store_batch = get_count<std::size_t>(s["batch"], "store", "batch");
    if (c.store_batch == 0) throw ConfigError("store.batch must be >= 1");
  }

  if (j.contains("http")) {
    const json& h = j["http"];
    check_keys(h, "http", {"pacing_ms", "timeout_s", "max_attempts", "initial_backoff_ms",
                           "max_backoff_ms", "user_agent", "cache"});
    if (h.contains("pacing_ms")) c.http.pacing = std::chrono::milliseconds(get<long long>(h["pacing_ms"], "http", "pacing_ms"));
    if (h.contains("timeout_s")) c.http.timeout = std::chrono::seconds(get<long long>(h["timeout_s"], "http", "timeout_s"));
    if (h.contains("max_attempts")) c.http.retry.max_attempts = get<int>(h["max_attempts"], "http", "max_attempts");
    if (h.contains("initial_backoff_ms")) {
      c.http.retry.initial_backoff =
          std::chrono::milliseconds(get<long long>(h["initial_backoff_ms"], "http", "initial_backoff_ms"));
    }
    if (h.contains("max_backoff_ms")) {
      c.http.retry.max_backoff =
          std::chrono::milliseconds(get<long long>(h["max_backoff_ms"], "http", "max_backoff_ms"));
    }
    if (h.contains("user_agent")) c.http.user_agent = get<std::string>(h["user_agent"], "http", "user_agent");
    if (h.contains("cache")) c.http.cache = get<bool>(h["cache"], "http", "cache");
    if (c.http.retry.max_attempts < 1) throw ConfigError("http.max_attempts must be >= 1");
  }

  if (j.contains("synth")) c.synth = mldata::SynthConfig::from_json(j["synth"]);
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return from_json(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

// ---------------------------------------------------------------------------
// Log

void Log::line(Stage stage, std::string_view status,
               const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string s = "stage=" + std::string(to_string(stage)) + " status=" + std::string(status);
  for (const auto& [k, v] : fields) {
    s += " " + k + "=";
    const bool quote = v.empty() || v.find_first_of(" \"=\t\n") != std::string::npos;
    if (!quote) {
      s += v;
      continue;
    }
    s.push_back('"');
    for (char c : v) {
      if (c == '"' || c == '\\') s.push_back('\\');
      s.push_back(c == '\n' ? ' ' : c);
    }
    s.push_back('"');
  }
  os_ << s << '\n';
  os_.flush();
}

// ---------------------------------------------------------------------------
// Stages

namespace {

using Fields = std::vector<std::pair<std::string, std::string>>;

std::string num(std::size_t n) { return std::to_string(n); }

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

void require_artifact(const fs::path& p, Stage producer) {
  if (!fs::exists(p)) throw StageOrderError(p, producer);
}

void require_input(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ConfigError(what + " not found: " + p.string());
}

void reset_dir(const fs::path& p) {
  fs::remove_all(p);
  fs::create_directories(p);
}

json parse_json_file(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw FormatError(p.string(), e.what());
  }
}

kgstore::TripleStore load_store(const fs::path& p) {
  kgstore::TripleStore store;
  store.load_ntriples(read_file(p));
  return store;
}

struct Context {
  const PipelineConfig& cfg;
  const RunOptions& opts;
  std::ostream& out;
  Log& log;
  Layout layout;
};

// --- harmonize ---------------------------------------------------------------

void run_harmonize(Context& c) {
  require_input(c.cfg.datasets_dir, "dataset descriptor directory");
  require_input(c.cfg.synonyms, "synonym map");
  require_input(c.cfg.raw_root, "raw data root");
  const auto descriptors = harmonize::load_descriptors(c.cfg.datasets_dir);
  const auto synonyms = harmonize::SynonymMap::load(c.cfg.synonyms);
  std::vector<const harmonize::DatasetDescriptor*> present;
  json skipped = json::array();
  for (const auto& d : descriptors) {
    if (fs::is_directory(c.cfg.raw_root / d.name)) {
      present.push_back(&d);
    } else {
      skipped.push_back(d.name);
    }
  }
  if (c.opts.dry_run) {
    c.log.line(Stage::harmonize, "dry-run",
               {{"descriptors", num(descriptors.size())}, {"with_raw_data", num(present.size())}});
    return;
  }
  std::vector<harmonize::HouseholdRecord> records;
  json report = json::object();
  std::size_t series = 0;
  for (const auto* d : present) {
    auto res = harmonize::parse_dataset(*d, c.cfg.raw_root / d->name, synonyms, c.cfg.threads);
    json errors = json::array();
    for (const auto& e : res.report.file_errors) errors.push_back({{"path", e.path}, {"message", e.message}});
    json empty = json::array();
    for (const auto& e : res.report.empty_series) empty.push_back({{"path", e.path}, {"message", e.message}});
    report[d->name] = {{"households", res.records.size()},
                       {"rows_read", res.report.rows_read},
                       {"rows_dropped", res.report.rows_dropped},
                       {"file_errors", errors},
                       {"empty_series", empty},
                       {"omitted_households", res.report.omitted_households},
                       {"unknown_names", res.report.unknown_names},
                       {"excluded_names", res.report.excluded_names}};
    for (auto& r : res.records) {
      series += r.series_count();
      records.push_back(std::move(r));
    }
    c.log.line(Stage::harmonize, "dataset",
               {{"name", d->name},
                {"households", num(report[d->name]["households"].get<std::size_t>())},
                {"file_errors", num(errors.size())}});
  }
  reset_dir(c.layout.archive());
  archive::write_archive(records, c.layout.archive(), c.cfg.threads);
  write_json(c.layout.reports() / "harmonize.json",
             {{"datasets", report}, {"skipped_without_raw_data", skipped}});
  c.log.line(Stage::harmonize, "ok",
             {{"datasets", num(present.size())},
              {"skipped", num(skipped.size())},
              {"households", num(records.size())},
              {"series", num(series)}});
}

// --- profiles ----------------------------------------------------------------

std::vector<harmonize::HouseholdRecord> read_records(Context& c) {
  require_artifact(c.layout.archive(), Stage::harmonize);
  return archive::read_archive(c.layout.archive(), c.cfg.threads);
}

std::string profile_file(const std::string& dataset, const std::string& household) {
  return harmonize::slug(dataset) + "/" + harmonize::slug(household) + ".json";
}

void run_profiles(Context& c) {
  require_artifact(c.layout.archive(), Stage::harmonize);
  if (c.opts.dry_run) {
    c.log.line(Stage::profiles, "dry-run",
               {{"households", num(archive::list_households(c.layout.archive()).size())}});
    return;
  }
  const auto records = read_records(c);
  std::vector<profiles::HouseholdProfiles> out(records.size());
  parallel_for(records.size(), c.cfg.threads, [&](std::size_t i) {
    const auto& r = records[i];
    const Zone zone(r.timezone);
    auto& hp = out[i];
    hp.dataset = r.dataset;
    hp.household = r.household;
    hp.timezone = r.timezone;
    if (r.aggregate) {
      hp.aggregate = profiles::compute_meter(*r.aggregate, false, zone, r.sampling_period_s,
                                             std::nullopt, c.cfg.profile, c.cfg.events);
    }
    for (const auto& [name, series] : r.appliances) {
      hp.appliances[name] = profiles::compute_meter(series, true, zone, r.sampling_period_s,
                                                    std::nullopt, c.cfg.profile, c.cfg.events);
    }
  });
  reset_dir(c.layout.profiles_dir());
  json index = json::array();
  std::size_t with_stats = 0;
  for (const auto& hp : out) {
    const std::string file = profile_file(hp.dataset, hp.household);
    write_json(c.layout.profiles_dir() / file, profiles::to_json(hp));
    index.push_back({{"dataset", hp.dataset}, {"household", hp.household}, {"file", file}});
    if (hp.aggregate && hp.aggregate->stats) {
      ++with_stats;
      const std::string stem = file.substr(0, file.size() - 5);
      for (const auto* p : {&hp.aggregate->daily, &hp.aggregate->weekly, &hp.aggregate->monthly}) {
        if (!*p) continue;
        write_file(c.layout.profiles_dir() /
                       (stem + "." + std::string(profiles::to_string((*p)->kind)) + ".csv"),
                   profiles::plot_csv(**p));
      }
    }
  }
  write_json(c.layout.profiles_index(), index);
  c.log.line(Stage::profiles, "ok",
             {{"households", num(out.size())}, {"aggregate_stats", num(with_stats)}});
}

// --- enrich ------------------------------------------------------------------

void run_enrich(Context& c) {
  require_artifact(c.layout.archive(), Stage::harmonize);
  require_input(c.cfg.geo, "geo config");
  const auto geo = enrich::GeoConfig::load(c.cfg.geo);
  enrich::IndicatorTables tables;
  if (fs::exists(c.cfg.indicators_dir)) tables = enrich::IndicatorTables::load_dir(c.cfg.indicators_dir);
  if (c.opts.dry_run) {
    c.log.line(Stage::enrich, "dry-run",
               {{"country_tables", num(tables.by_country.size())}, {"grids", num(tables.grids.size())}});
    return;
  }
  const auto records = read_records(c);
  json arr = json::array();
  std::size_t located = 0;
  for (const auto& r : records) {
    json e{{"dataset", r.dataset}, {"household", r.household}};
    try {
      auto loc = enrich::resolve_location(r, geo);
      loc = enrich::attach_indicators(std::move(loc), tables, geo.grid_max_distance_km);
      e["location"] = enrich::to_json(loc);
      e["error"] = nullptr;
      ++located;
    } catch (const enrich::UnlocatableError& ex) {
      e["location"] = nullptr;
      e["error"] = ex.what();
    }
    arr.push_back(std::move(e));
  }
  write_json(c.layout.locations(), arr);
  c.log.line(Stage::enrich, "ok",
             {{"households", num(records.size())},
              {"located", num(located)},
              {"unlocatable", num(records.size() - located)}});
}

// --- stage -------------------------------------------------------------------

void run_stage(Context& c) {
  require_artifact(c.layout.archive(), Stage::harmonize);
  require_artifact(c.layout.profiles_index(), Stage::profiles);
  require_artifact(c.layout.locations(), Stage::enrich);
  if (c.opts.dry_run) {
    c.log.line(Stage::stage, "dry-run");
    return;
  }
  const auto records = read_records(c);
  staging::ProfileIndex pidx;
  for (const auto& e : parse_json_file(c.layout.profiles_index())) {
    auto hp = profiles::household_profiles_from_json(
        parse_json_file(c.layout.profiles_dir() / e.at("file").get<std::string>()));
    pidx[{hp.dataset, hp.household}] = std::move(hp);
  }
  staging::LocationIndex lidx;
  for (const auto& e : parse_json_file(c.layout.locations())) {
    if (e.at("location").is_null()) continue;
    lidx[{e.at("dataset").get<std::string>(), e.at("household").get<std::string>()}] =
        enrich::location_from_json(e.at("location"));
  }
  const auto bundle = staging::build_staging(records, pidx, lidx);
  bundle.validate();
  reset_dir(c.layout.staging_dir());
  staging::export_staging(bundle, c.layout.staging_dir());
  c.log.line(Stage::stage, "ok",
             {{"households", num(bundle.households.rows.size())},
              {"locations", num(bundle.locations.rows.size())},
              {"devices", num(bundle.devices.rows.size())}});
}

// --- map ---------------------------------------------------------------------

void run_map(Context& c) {
  require_artifact(c.layout.staging_manifest(), Stage::stage);
  require_input(c.cfg.mapping, "mapping document");
  const auto bundle = staging::import_staging(c.layout.staging_dir());
  const auto plan = rdfmap::load_mapping(c.cfg.mapping, bundle);
  if (c.opts.dry_run) {
    c.log.line(Stage::map, "dry-run", {{"triples_maps", num(plan.maps.size())}});
    return;
  }
  const auto res = rdfmap::apply_mapping(plan, bundle);
  write_file(c.layout.kg(), rdf::serialize_ntriples(res.triples));
  json issues = json::array();
  for (const auto& i : res.issues) {
    issues.push_back({{"map", i.map}, {"row", i.row}, {"message", i.message}});
  }
  write_json(c.layout.reports() / "map.json", {{"triples", res.triples.size()}, {"issues", issues}});
  c.log.line(Stage::map, "ok", {{"triples", num(res.triples.size())}, {"issues", num(issues.size())}});
}

// --- link --------------------------------------------------------------------

struct Endpoints {
  std::vector<std::unique_ptr<sparql::SparqlClient>> clients;
  std::map<std::string, std::unique_ptr<linker::QueryEndpoint>> by_kb;
};

Endpoints open_endpoints(const PipelineConfig& cfg) {
  Endpoints e;
  for (const auto& kb : cfg.linker.knowledge_bases) {
    auto it = cfg.kb_endpoints.find(kb.name);
    if (it == cfg.kb_endpoints.end()) continue;
    if (!it->second.url.empty()) {
      e.clients.push_back(std::make_unique<sparql::SparqlClient>(it->second.url, cfg.http));
      e.by_kb[kb.name] = std::make_unique<linker::RemoteEndpoint>(*e.clients.back());
    } else {
      require_input(it->second.fixture, "fixture for " + kb.name);
      e.by_kb[kb.name] = std::make_unique<linker::LocalEndpoint>(load_store(it->second.fixture));
    }
  }
  return e;
}

void run_link(Context& c) {
  require_artifact(c.layout.staging_manifest(), Stage::stage);
  auto endpoints = open_endpoints(c.cfg);
  for (const auto& kb : c.cfg.linker.knowledge_bases) {
    if (!endpoints.by_kb.count(kb.name)) {
      c.log.line(Stage::link, "warn", {{"kb", kb.name}, {"reason", "no endpoint configured"}});
    }
  }
  const auto bundle = staging::import_staging(c.layout.staging_dir());
  if (c.opts.dry_run) {
    c.log.line(Stage::link, "dry-run",
               {{"locations", num(bundle.locations.rows.size())},
                {"knowledge_bases", num(endpoints.by_kb.size())}});
    return;
  }
  const auto& t = bundle.locations;
  const std::size_t ci = t.require_column("city"), co = t.require_column("country"),
                    la = t.require_column("lat"), lo = t.require_column("lon");
  const kgstore::ResourceIris iris;

  std::set<std::string> countries;
  for (const auto& row : t.rows) {
    if (row[co]) countries.insert(*row[co]);
  }
  std::vector<linker::LinkResult> links;
  for (const auto& kb : c.cfg.linker.knowledge_bases) {
    auto ep = endpoints.by_kb.find(kb.name);
    if (ep == endpoints.by_kb.end()) continue;
    for (const auto& country : countries) {
      links.push_back(linker::link_country(iris.country(country), country, *ep->second, kb));
    }
    std::set<std::pair<std::string, std::string>> cities_done;
    for (const auto& row : t.rows) {
      if (!row[ci] || !row[co] || !cities_done.insert({*row[co], *row[ci]}).second) continue;
      linker::LinkResult r;
      r.local_iri = iris.city(*row[co], *row[ci]);
      r.kb = kb.name;
      const bool has_coords = row[la] && row[lo] && parse_double(*row[la]) && parse_double(*row[lo]);
      if (has_coords) {
        const double lat = parse_double(*row[la]).value();
        const double lon = parse_double(*row[lo]).value();
        const auto cands =
            linker::settlements_within(lat, lon, c.cfg.linker.radius_km, *ep->second, kb);
        const auto m = linker::match_city(*row[ci], lat, lon, cands, c.cfg.linker.threshold);
        if (m.settlement) {
          r.external_iri = m.settlement->iri;
          r.label = m.settlement->label;
        }
        r.method = m.method;
        r.score = m.score;
        r.ambiguous = m.ambiguous;
      }
      links.push_back(std::move(r));
    }
  }
  std::sort(links.begin(), links.end(), [](const auto& a, const auto& b) {
    return std::tie(a.local_iri, a.kb) < std::tie(b.local_iri, b.kb);
  });
  const auto same = linker::emit_sameas(links);
  write_json(c.layout.links(), linker::link_report(links));
  write_file(c.layout.sameas(), rdf::serialize_ntriples(same));
  std::map<std::string, std::size_t> by_method;
  for (const auto& l : links) ++by_method[std::string(linker::to_string(l.method))];
  Fields f{{"links", num(links.size())}, {"same_as", num(same.size())}};
  for (const auto& [m, n] : by_method) f.emplace_back(m, num(n));
  c.log.line(Stage::link, "ok", f);
}

// --- load --------------------------------------------------------------------

std::unique_ptr<sparql::SparqlClient> store_client(const PipelineConfig& cfg) {
  if (!cfg.store_endpoint) return nullptr;
  return std::make_unique<sparql::SparqlClient>(*cfg.store_endpoint, cfg.http);
}

void run_load(Context& c) {
  require_artifact(c.layout.kg(), Stage::map);
  const bool linked = fs::exists(c.layout.sameas());
  if (!linked) c.log.line(Stage::load, "warn", {{"reason", "no link artifacts; loading without owl:sameAs"}});
  auto client = store_client(c.cfg);
  if (c.opts.dry_run) {
    c.log.line(Stage::load, "dry-run", {{"remote", client ? client->url() : "none"}});
    return;
  }
  auto store = load_store(c.layout.kg());
  if (linked) store.load_ntriples(read_file(c.layout.sameas()));
  write_file(c.layout.store(), store.to_ntriples());
  if (client) kgstore::remote_insert(*client, store.triples(), c.cfg.store_batch);
  c.log.line(Stage::load, "ok",
             {{"triples", num(store.size())}, {"remote", client ? client->url() : "none"}});
}

// --- stats / query -----------------------------------------------------------

void run_stats(Context& c) {
  require_artifact(c.layout.store(), Stage::load);
  if (c.opts.dry_run) {
    c.log.line(Stage::stats, "dry-run");
    return;
  }
  const auto report = kgstore::kg_stats(load_store(c.layout.store()));
  c.out << kgstore::to_json(report).dump(2) << '\n';
  c.log.line(Stage::stats, "ok", {{"triples", num(report.total_triples)}});
}

void run_query(Context& c) {
  const auto parsed = sparql::parse_query(c.opts.query_text);  // syntax check either way
  if (c.opts.remote) {
    auto client = store_client(c.cfg);
    if (!client) throw ConfigError("query --remote needs store.endpoint in the config");
    if (c.opts.dry_run) {
      c.log.line(Stage::query, "dry-run", {{"patterns", num(parsed.patterns.size())}});
      return;
    }
    const auto res = kgstore::remote_query(*client, c.opts.query_text);
    c.out << sparql::results_to_json(res).dump(2) << '\n';
    c.log.line(Stage::query, "ok", {{"rows", num(res.rows.size())}, {"remote", client->url()}});
    return;
  }
  require_artifact(c.layout.store(), Stage::load);
  if (c.opts.dry_run) {
    c.log.line(Stage::query, "dry-run", {{"patterns", num(parsed.patterns.size())}});
    return;
  }
  const auto res = sparql::evaluate(parsed, load_store(c.layout.store()));
  c.out << sparql::results_to_json(res).dump(2) << '\n';
  c.log.line(Stage::query, "ok", {{"rows", num(res.rows.size())}});
}

// --- ml ----------------------------------------------------------------------

void run_ml_prep(Context& c) {
  require_artifact(c.layout.archive(), Stage::harmonize);
  require_input(c.cfg.synonyms, "synonym map");
  const auto synonyms = harmonize::SynonymMap::load(c.cfg.synonyms);
  c.cfg.synth.validate();
  if (c.opts.dry_run) {
    const auto [train, test] = mldata::split_counts(c.cfg.synth.dataset_size, c.cfg.synth.train_fraction);
    c.log.line(Stage::ml_prep, "dry-run", {{"train", num(train)}, {"test", num(test)}});
    return;
  }
  const auto records = read_records(c);
  mldata::PoolReport pr;
  const auto pool = mldata::prepare_appliance_pool(records, synonyms, c.cfg.synth, pr, c.cfg.threads);
  for (const auto& e : pr.excluded) {
    c.log.line(Stage::ml_prep, "excluded",
               {{"dataset", e.dataset},
                {"household", e.household},
                {"sampling_period_s", format_decimal(e.sampling_period_s)}});
  }
  const auto& classes = synonyms.ml_classes();
  // Fails before anything is written when the pool is empty.
  if (pool.empty()) throw InsufficientDataError("appliance pool has no windows; nothing written");
  reset_dir(c.layout.ml_dir());
  const auto rep = mldata::build_dataset(pool, classes, c.cfg.synth, c.layout.ml_dir(), c.cfg.threads);
  std::string list;
  for (const auto& n : classes) list += n + "\n";
  write_file(c.layout.ml_dir() / "classes.txt", list);
  json pool_json = mldata::to_json(pr);
  for (const auto& [name, windows] : pool) pool_json["windows_per_class"][name] = windows.size();
  write_json(c.layout.ml_dir() / "pool_report.json", pool_json);
  const auto preds = mldata::write_prediction_windows(records, classes, c.cfg.synth, c.layout.predict_dir());
  std::size_t pred_windows = 0;
  for (const auto& p : preds) pred_windows += p.windows;
  c.log.line(Stage::ml_prep, "ok",
             {{"pool_classes", num(pool.size())},
              {"pool_windows", num(pr.kept)},
              {"train", num(rep.train)},
              {"test", num(rep.test)},
              {"clipped", num(rep.clipped)},
              {"predict_households", num(preds.size())},
              {"predict_windows", num(pred_windows)}});
}

std::vector<fs::path> prediction_files(const Context& c) {
  std::vector<fs::path> inputs = c.opts.predictions;
  if (inputs.empty()) inputs.push_back(c.layout.predictions_dir());
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
      }
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      throw ConfigError("predictions not found: " + in.string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

void run_ml_ingest(Context& c) {
  require_artifact(c.layout.store(), Stage::load);
  require_artifact(c.layout.staging_manifest(), Stage::stage);
  const auto files = prediction_files(c);
  std::vector<std::string> classes;
  if (fs::exists(c.cfg.synonyms)) classes = harmonize::SynonymMap::load(c.cfg.synonyms).ml_classes();
  std::vector<kgstore::Predictions> preds;
  for (const auto& f : files) {
    preds.push_back(kgstore::predictions_from_json(parse_json_file(f), classes.empty() ? nullptr : &classes));
  }
  if (c.opts.dry_run) {
    c.log.line(Stage::ml_ingest, "dry-run", {{"files", num(files.size())}});
    return;
  }
  // Ground truth: households whose dataset marks them as sub-metered.
  const auto bundle = staging::import_staging(c.layout.staging_dir());
  const auto& h = bundle.households;
  const std::size_t ds = h.require_column("dataset"), hh = h.require_column("household"),
                    sub = h.require_column("is_submetered");
  const kgstore::ResourceIris iris;
  std::set<std::string> guard;
  for (const auto& row : h.rows) {
    if (row[sub] == std::optional<std::string>("true")) guard.insert(iris.household(*row[ds], *row[hh]));
  }
  auto store = load_store(c.layout.store());
  auto client = store_client(c.cfg);
  json report = json::array();
  std::size_t inserted = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto r = kgstore::ingest_predictions(preds[i], store, guard, iris);
    inserted += r.inserted;
    if (client) kgstore::remote_insert(*client, kgstore::prediction_triples(preds[i], iris), c.cfg.store_batch);
    report.push_back({{"file", files[i].filename().string()},
                      {"household", r.household_iri},
                      {"devices", r.devices},
                      {"inserted", r.inserted}});
  }
  write_file(c.layout.store(), store.to_ntriples());
  write_json(c.layout.reports() / "ingest.json", report);
  c.log.line(Stage::ml_ingest, "ok",
             {{"files", num(files.size())}, {"inserted", num(inserted)}, {"triples", num(store.size())}});
}

}  // namespace

void run(Stage stage, const PipelineConfig& cfg, const RunOptions& opts, std::ostream& out, Log& log) {
  Context c{cfg, opts, out, log, Layout{cfg.workdir}};
  const auto t0 = std::chrono::steady_clock::now();
  log.line(stage, "start", {{"workdir", cfg.workdir.string()}, {"dry_run", opts.dry_run ? "true" : "false"}});
  switch (stage) {
    case Stage::harmonize: run_harmonize(c); break;
    case Stage::profiles: run_profiles(c); break;
    case Stage::enrich: run_enrich(c); break;
    case Stage::stage: run_stage(c); break;
    case Stage::map: run_map(c); break;
    case Stage::link: run_link(c); break;
    case Stage::load: run_load(c); break;
    case Stage::stats: run_stats(c); break;
    case Stage::query: run_query(c); break;
    case Stage::ml_prep: run_ml_prep(c); break;
    case Stage::ml_ingest: run_ml_ingest(c); break;
  }
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - t0);
  log.line(stage, "done", {{"elapsed_ms", std::to_string(ms.count())}});
}

}  // namespace elkg::pipeline
