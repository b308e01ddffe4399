#include <gtest/gtest.h>

#include <sstream>

#include "elkg/error.hpp"
#include "elkg/kgstore.hpp"
#include "elkg/pipeline.hpp"
#include "elkg/testing/fixture_server.hpp"
#include "elkg/text.hpp"
#include "support.hpp"

namespace p = elkg::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> files_under(const fs::path& root) {
  std::vector<std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Runner {
  p::PipelineConfig cfg;
  std::ostringstream out, err;
  p::Log log{err};

  std::string run(p::Stage s, p::RunOptions opts = {}) {
    out.str("");
    p::run(s, cfg, opts, out, log);
    return out.str();
  }
};

}  // namespace

TEST(Pipeline, StageNames) {
  const auto all = p::all_stages();
  ASSERT_EQ(all.size(), 11u);
  for (auto s : all) EXPECT_EQ(p::stage_from_string(p::to_string(s)), s);
  EXPECT_EQ(p::to_string(p::Stage::ml_prep), "ml-prep");
  EXPECT_EQ(p::to_string(p::Stage::ml_ingest), "ml-ingest");
  EXPECT_THROW(p::stage_from_string("ml_prep"), elkg::ConfigError);
  EXPECT_THROW(p::stage_from_string(""), elkg::ConfigError);
}

TEST(Pipeline, ExampleConfigLoads) {
  const fs::path file = elkg::test::source_dir() / "config/pipeline.example.json";
  const auto c = p::PipelineConfig::load(file);
  const fs::path base = file.parent_path();
  EXPECT_EQ(c.workdir, base / "../work");
  EXPECT_EQ(c.mapping, base / "mapping.json");
  EXPECT_TRUE(fs::exists(c.mapping));
  EXPECT_TRUE(fs::exists(c.synonyms));
  EXPECT_TRUE(fs::exists(c.geo));
  EXPECT_EQ(c.kb_endpoints.at("wikidata").url, "https://query.wikidata.org/sparql");
  EXPECT_EQ(c.linker.knowledge_bases.size(), 2u);
  EXPECT_EQ(c.http.pacing, std::chrono::milliseconds(1000));
  EXPECT_EQ(c.http.retry.max_attempts, 5);
  EXPECT_EQ(c.synth.dataset_size, 100000u);
  EXPECT_EQ(c.store_batch, 1000u);
  EXPECT_FALSE(c.store_endpoint);
}

TEST(Pipeline, DefaultsResolveAgainstBaseDir) {
  const auto c = p::PipelineConfig::from_json(json::object(), "/tmp/x");
  EXPECT_EQ(c.workdir, fs::path("/tmp/x/work"));
  EXPECT_EQ(c.raw_root, fs::path("/tmp/x/raw"));
  EXPECT_EQ(c.linker.radius_km, 50.0);
  EXPECT_EQ(c.profile.coverage_floor, 0.8);
  const auto abs = p::PipelineConfig::from_json({{"workdir", "/data/w"}}, "/tmp/x");
  EXPECT_EQ(abs.workdir, fs::path("/data/w"));
}

TEST(Pipeline, ConfigRejections) {
  const std::vector<json> bad = {
      json::array(),
      {{"wrkdir", "w"}},
      {{"threads", -1}},
      {{"workdir", 3}},
      {{"profiles", {{"coverage_floor", 1.5}}}},
      {{"profiles", {{"floor", 0.5}}}},
      {{"linker", {{"endpoints", {{"wikidata", {{"url", "http://x"}, {"fixture", "f.nt"}}}}}}}},
      {{"linker", {{"endpoints", {{"wikidata", json::object()}}}}}},
      {{"linker", {{"threshold", 120}}}},
      {{"store", {{"batch", 0}}}},
      {{"store", {{"batch", -5}}}},
      {{"store", {{"url", "http://x"}}}},
      {{"http", {{"max_attempts", 0}}}},
      {{"http", {{"pacing_ms", "fast"}}}},
      {{"synth", {{"train_fraction", 0}}}},
  };
  for (const auto& j : bad) {
    EXPECT_THROW(p::PipelineConfig::from_json(j, "."), elkg::ConfigError) << j.dump();
  }
  elkg::test::TempDir d;
  elkg::write_file(d / "broken.json", "{ not json");
  EXPECT_THROW(p::PipelineConfig::load(d / "broken.json"), elkg::ConfigError);
  EXPECT_THROW(p::PipelineConfig::load(d / "absent.json"), elkg::ConfigError);
}

TEST(Pipeline, LogQuotesValues) {
  std::ostringstream os;
  p::Log log(os);
  log.line(p::Stage::link, "warn", {{"kb", "wikidata"}, {"reason", "no \"endpoint\"\nconfigured"}, {"x", ""}});
  EXPECT_EQ(os.str(), "stage=link status=warn kb=wikidata reason=\"no \\\"endpoint\\\" configured\" x=\"\"\n");
}

TEST(Pipeline, StagesRequireUpstreamArtifacts) {
  elkg::test::TempDir d;
  auto world = elkg::test::write_fixture_world(d.path());
  Runner r{p::PipelineConfig::load(world.config)};
  const std::vector<std::pair<p::Stage, p::Stage>> order = {
      {p::Stage::profiles, p::Stage::harmonize}, {p::Stage::enrich, p::Stage::harmonize},
      {p::Stage::stage, p::Stage::harmonize},    {p::Stage::map, p::Stage::stage},
      {p::Stage::link, p::Stage::stage},         {p::Stage::load, p::Stage::map},
      {p::Stage::stats, p::Stage::load},         {p::Stage::ml_prep, p::Stage::harmonize},
      {p::Stage::ml_ingest, p::Stage::load},
  };
  for (const auto& [stage, producer] : order) {
    try {
      r.run(stage);
      ADD_FAILURE() << p::to_string(stage) << " ran without inputs";
    } catch (const p::StageOrderError& e) {
      EXPECT_EQ(e.producer(), producer) << p::to_string(stage);
      EXPECT_NE(std::string(e.what()).find(std::string(p::to_string(producer))), std::string::npos);
    }
  }
  p::RunOptions q;
  q.query_text = "SELECT * WHERE { ?s ?p ?o }";
  EXPECT_THROW(r.run(p::Stage::query, q), p::StageOrderError);
  q.query_text = "SELECT * WHERE { ?s ?p ?o OPTIONAL { ?s ?q ?r } }";
  EXPECT_THROW(r.run(p::Stage::query, q), elkg::ParseError);
  EXPECT_TRUE(files_under(world.workdir).empty());
}

TEST(Pipeline, DryRunWritesNothing) {
  elkg::test::TempDir d;
  auto world = elkg::test::write_fixture_world(d.path());
  Runner r{p::PipelineConfig::load(world.config)};
  p::RunOptions dry;
  dry.dry_run = true;
  r.run(p::Stage::harmonize, dry);
  EXPECT_TRUE(files_under(world.workdir).empty());
  EXPECT_NE(r.err.str().find("stage=harmonize status=dry-run descriptors=3 with_raw_data=3"), std::string::npos)
      << r.err.str();

  r.run(p::Stage::harmonize);
  const auto before = files_under(world.workdir);
  for (auto s : {p::Stage::profiles, p::Stage::enrich, p::Stage::ml_prep}) r.run(s, dry);
  EXPECT_EQ(files_under(world.workdir), before);
}

TEST(Pipeline, FullRunPushesToRemoteStore) {
  elkg::test::TempDir d;
  auto world = elkg::test::write_fixture_world(d.path(), 50);
  elkg::testing::FixtureSparqlServer server;
  json j = json::parse(elkg::read_file(world.config));
  j["store"] = {{"endpoint", server.url()}, {"batch", 25}};
  j["http"] = {{"pacing_ms", 0}};
  elkg::write_file(world.config, j.dump(2));
  Runner r{p::PipelineConfig::load(world.config)};

  for (auto s : {p::Stage::harmonize, p::Stage::profiles, p::Stage::enrich, p::Stage::stage, p::Stage::map,
                 p::Stage::link, p::Stage::load}) {
    r.run(s);
  }
  const p::Layout lay{world.workdir};
  const auto local = elkg::read_file(lay.store());
  EXPECT_EQ(server.store().to_ntriples(), local);
  const auto n = server.store().size();
  EXPECT_EQ(server.updates(), (n + 24) / 25);

  const auto stats = json::parse(r.run(p::Stage::stats));
  EXPECT_EQ(stats["total_triples"], n);

  // The same query answered locally and by the remote store.
  p::RunOptions q;
  q.query_text = elkg::read_file(elkg::test::source_dir() / "config/queries/city_links.rq");
  const auto here = json::parse(r.run(p::Stage::query, q));
  q.remote = true;
  const auto there = json::parse(r.run(p::Stage::query, q));
  EXPECT_EQ(here, there);
  EXPECT_FALSE(here["results"]["bindings"].empty());

  // Predictions reach both stores.
  r.run(p::Stage::ml_prep);
  fs::create_directories(lay.predictions_dir());
  elkg::write_file(lay.predictions_dir() / "c2.json",
                   json{{"dataset", "FIXC"},
                        {"household", "c2"},
                        {"model_version", "t"},
                        {"threshold", 0.5},
                        {"probabilities", {{"kettle", 0.8}, {"microwave", 0.2}}},
                        {"present", {"kettle"}}}
                       .dump());
  r.run(p::Stage::ml_ingest);
  EXPECT_EQ(server.store().to_ntriples(), elkg::read_file(lay.store()));
  EXPECT_EQ(elkg::kgstore::kg_stats(server.store()).class_instances.at(elkg::kgstore::vocab::device()),
            stats["class_instances"][elkg::kgstore::vocab::device()].get<std::size_t>() + 1);
}
