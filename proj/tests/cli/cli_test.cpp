#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <map>

#include <json.hpp>

#include "elkg/mldata.hpp"
#include "elkg/text.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

// Runs the CLI with `args` (already quoted where needed).
Result elkg_cli(const elkg::test::FixtureWorld& w, const std::string& args, const std::string& stdin_text = "") {
  const fs::path io = w.root / "io";
  fs::create_directories(io);
  elkg::write_file(io / "stdin", stdin_text);
  const std::string cmd = quote(ELKG_CLI_PATH) + " " + args + " < " + quote((io / "stdin").string()) + " > " +
                          quote((io / "stdout").string()) + " 2> " + quote((io / "stderr").string());
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = elkg::read_file(io / "stdout");
  r.err = elkg::read_file(io / "stderr");
  return r;
}

Result stage(const elkg::test::FixtureWorld& w, const std::string& sub, const std::string& extra = "") {
  return elkg_cli(w, sub + " --config " + quote(w.config.string()) + (extra.empty() ? "" : " " + extra));
}

const char* const kChain[] = {"harmonize", "profiles", "enrich", "stage", "map", "link", "load", "ml-prep"};

void run_chain(const elkg::test::FixtureWorld& w, const std::string& extra = "") {
  for (const char* s : kChain) {
    const auto r = stage(w, s, extra);
    ASSERT_EQ(r.code, 0) << s << "\n" << r.err;
    EXPECT_NE(r.err.find(std::string("stage=") + s + " status=ok"), std::string::npos) << r.err;
  }
}

std::map<std::string, std::string> artifact_hashes(const fs::path& workdir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(workdir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), workdir).string()] = elkg::test::sha256_file(e.path());
  }
  return out;
}

json prediction(const std::string& household) {
  return {{"dataset", "FIXC"},
          {"household", household},
          {"model_version", "cli-test"},
          {"threshold", 0.5},
          {"probabilities", {{"dishwasher", 0.93}, {"kettle", 0.61}, {"microwave", 0.05}}},
          {"present", {"dishwasher", "kettle"}}};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new elkg::test::TempDir();
    world_ = elkg::test::write_fixture_world(dir_->path(), 120);
    run_chain(world_);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static elkg::test::TempDir* dir_;
  static elkg::test::FixtureWorld world_;
};

elkg::test::TempDir* Cli::dir_ = nullptr;
elkg::test::FixtureWorld Cli::world_;

}  // namespace

TEST_F(Cli, ChainProducesEveryArtifact) {
  const fs::path w = world_.workdir;
  for (const char* f : {"profiles/index.json", "enrich/locations.json", "staging/schema.json",
                        "staging/schema.sql", "staging/households.csv", "kg/kg.nt", "link/links.json",
                        "link/sameas.nt", "kg/store.nt", "ml/train.ekgw", "ml/test.ekgw", "ml/train.ekgw.json",
                        "ml/classes.txt", "ml/pool_report.json", "reports/harmonize.json", "reports/map.json"}) {
    EXPECT_TRUE(fs::exists(w / f)) << f;
  }
  const auto harm = json::parse(elkg::read_file(w / "reports/harmonize.json"));
  EXPECT_EQ(harm["datasets"].size(), 3u);
  EXPECT_EQ(harm["datasets"]["FIXC"]["households"], 2);

  // Sidecar and file sizes agree with the split.
  EXPECT_EQ(fs::file_size(w / "ml/train.ekgw"), elkg::mldata::kHeaderBytes + 96 * elkg::mldata::kRecordBytes);
  EXPECT_EQ(fs::file_size(w / "ml/test.ekgw"), elkg::mldata::kHeaderBytes + 24 * elkg::mldata::kRecordBytes);
  const auto side = json::parse(elkg::read_file(w / "ml/train.ekgw.json"));
  EXPECT_EQ(side["records"], 96);
  EXPECT_EQ(side["classes"].size(), 64u);
  // Only FIXC c2 is unsubmetered with a fine enough sampling period.
  EXPECT_TRUE(fs::exists(w / "ml/predict/FIXC_c2.ekgw")) << elkg::read_file(w / "ml/pool_report.json");
  EXPECT_FALSE(fs::exists(w / "ml/predict/FIXC_c1.ekgw"));

  // Every city is linked to both knowledge bases.
  const auto links = json::parse(elkg::read_file(w / "link/links.json"));
  std::size_t cities = 0;
  for (const auto& l : links) {
    if (l["local"].get<std::string>().find("/city/") == std::string::npos &&
        l["method"].get<std::string>() == "exact-country") {
      continue;
    }
    EXPECT_FALSE(l["external"].is_null()) << l.dump();
    cities += l["method"] == "exact-city";
  }
  EXPECT_EQ(cities, 6u) << links.dump(2);
}

TEST_F(Cli, StatsMatchAnIndependentScan) {
  const auto r = stage(world_, "stats");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto stats = json::parse(r.out);
  const auto scan = elkg::test::scan_ntriples(elkg::read_file(world_.workdir / "kg/store.nt"));
  EXPECT_EQ(stats["total_triples"], scan.triples);
  EXPECT_EQ(stats["unique_predicates"], scan.predicates);
  EXPECT_EQ(stats["nodes"], scan.nodes);
  EXPECT_EQ(stats["unique_classes"], scan.class_instances.size());
  EXPECT_EQ(stats["appliance_devices"], scan.appliance_devices);
  for (const auto& [cls, n] : stats["class_instances"].items()) {
    auto it = scan.class_instances.find(cls);
    EXPECT_EQ(n, it == scan.class_instances.end() ? 0u : it->second) << cls;
  }
  EXPECT_EQ(stats["same_as"], json(scan.same_as));
  EXPECT_GT(scan.same_as.size(), 0u);
}

TEST_F(Cli, QueryFromFileAndStdin) {
  const fs::path q = elkg::test::source_dir() / "config/queries/london_households.rq";
  const auto from_file = stage(world_, "query", "--file " + quote(q.string()));
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  const auto from_stdin =
      elkg_cli(world_, "query --config " + quote(world_.config.string()), elkg::read_file(q));
  ASSERT_EQ(from_stdin.code, 0) << from_stdin.err;
  EXPECT_EQ(from_file.out, from_stdin.out);
  const auto res = json::parse(from_file.out);
  EXPECT_EQ(res["results"]["bindings"].size(), 2u) << from_file.out;

  const auto bad = elkg_cli(world_, "query --config " + quote(world_.config.string()),
                            "SELECT * WHERE { ?s ?p ?o OPTIONAL { ?s ?q ?r } }");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("OPTIONAL"), std::string::npos) << bad.err;
}

TEST_F(Cli, RerunIsByteIdentical) {
  const auto first = artifact_hashes(world_.workdir);
  elkg::test::TempDir other;
  auto twin = elkg::test::write_fixture_world(other.path(), 120);
  run_chain(twin, "--threads 1");
  EXPECT_EQ(artifact_hashes(twin.workdir), first);
  run_chain(twin);
  EXPECT_EQ(artifact_hashes(twin.workdir), first);
}

TEST_F(Cli, ExitCodes) {
  elkg::test::TempDir fresh;
  auto w = elkg::test::write_fixture_world(fresh.path(), 10);
  const auto early = stage(w, "map");
  EXPECT_EQ(early.code, 3);
  EXPECT_NE(early.err.find("kind=stage-order"), std::string::npos) << early.err;
  EXPECT_NE(early.err.find("producer=stage"), std::string::npos) << early.err;
  EXPECT_FALSE(fs::exists(w.workdir / "kg"));

  EXPECT_EQ(elkg_cli(w, "").code, 2);
  EXPECT_EQ(elkg_cli(w, "frobnicate").code, 2);
  EXPECT_EQ(elkg_cli(w, "stats --config /nonexistent/pipeline.json").code, 2);
  EXPECT_EQ(stage(w, "harmonize", "--threads -3").code, 2);
  EXPECT_EQ(elkg_cli(w, "--help").code, 0);

  elkg::write_file(w.root / "bad.json", "{\"workdir\": \"work\", \"unknown\": 1}");
  EXPECT_EQ(elkg_cli(w, "harmonize --config " + quote((w.root / "bad.json").string())).code, 2);

  const auto dry = stage(w, "harmonize", "--dry-run");
  EXPECT_EQ(dry.code, 0);
  EXPECT_FALSE(fs::exists(w.workdir));
}

TEST_F(Cli, IngestAcceptsUnmeteredAndRefusesSubmetered) {
  // Work on a copy so the shared world stays pristine for other tests.
  elkg::test::TempDir copy;
  fs::copy(dir_->path(), copy.path(), fs::copy_options::recursive);
  json cfg = json::parse(elkg::read_file(copy.path() / "pipeline.json"));
  auto w = world_;
  w.root = copy.path();
  w.config = copy.path() / "pipeline.json";
  w.workdir = copy.path() / "work";

  const fs::path preds = w.root / "preds";
  fs::create_directories(preds);
  elkg::write_file(preds / "c1.json", prediction("c1").dump());
  elkg::write_file(preds / "c2.json", prediction("c2").dump());
  const std::string before = elkg::read_file(w.workdir / "kg/store.nt");

  const auto refused = stage(w, "ml-ingest", "--predictions " + quote((preds / "c1.json").string()));
  EXPECT_EQ(refused.code, 1);
  EXPECT_NE(refused.err.find("submetered"), std::string::npos) << refused.err;
  EXPECT_EQ(elkg::read_file(w.workdir / "kg/store.nt"), before);

  const auto ok = stage(w, "ml-ingest", "--predictions " + quote((preds / "c2.json").string()));
  ASSERT_EQ(ok.code, 0) << ok.err;
  // Type, name, installedIn and isPredicted per device; isSubmetered false is already there.
  EXPECT_NE(ok.err.find("inserted=8"), std::string::npos) << ok.err;
  const auto scan_before = elkg::test::scan_ntriples(before);
  const auto scan_after = elkg::test::scan_ntriples(elkg::read_file(w.workdir / "kg/store.nt"));
  EXPECT_EQ(scan_after.triples, scan_before.triples + 8);
  EXPECT_EQ(scan_after.appliance_devices, scan_before.appliance_devices + 2);

  const auto q = stage(w, "query",
                       "--file " + quote((elkg::test::source_dir() / "config/queries/predicted_devices.rq").string()));
  ASSERT_EQ(q.code, 0) << q.err;
  EXPECT_EQ(json::parse(q.out)["results"]["bindings"].size(), 2u) << q.out;

  // Idempotent.
  const auto again = stage(w, "ml-ingest", "--predictions " + quote((preds / "c2.json").string()));
  ASSERT_EQ(again.code, 0);
  EXPECT_NE(again.err.find("inserted=0"), std::string::npos) << again.err;
}
