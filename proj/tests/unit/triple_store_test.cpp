#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "elkg/triple_store.hpp"

namespace r = elkg::rdf;
using elkg::kgstore::TripleStore;

namespace {

std::vector<r::Term> vocabulary(std::size_t n) {
  std::vector<r::Term> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(r::Term::iri("urn:t:" + std::to_string(i)));
  v.push_back(r::Term::literal("7", r::xsd("integer")));
  v.push_back(r::Term::lang_literal("seven", "en"));
  return v;
}

r::Triple random_triple(std::mt19937_64& rng, const std::vector<r::Term>& v) {
  auto pick = [&](std::size_t lim) { return v[std::uniform_int_distribution<std::size_t>(0, lim - 1)(rng)]; };
  return {pick(v.size() - 2), pick(8), pick(v.size())};
}

std::vector<r::Triple> brute(const std::set<r::Triple>& all, const std::optional<r::Term>& s,
                             const std::optional<r::Term>& p, const std::optional<r::Term>& o) {
  std::vector<r::Triple> out;
  for (const auto& t : all) {
    if ((!s || t.s == *s) && (!p || t.p == *p) && (!o || t.o == *o)) out.push_back(t);
  }
  return out;
}

std::vector<r::Triple> sorted(std::vector<r::Triple> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(TripleStore, InsertEraseContains) {
  TripleStore st;
  const r::Triple t{r::Term::iri("urn:s"), r::Term::iri("urn:p"), r::Term::literal("o")};
  EXPECT_TRUE(st.insert(t));
  EXPECT_FALSE(st.insert(t));
  EXPECT_TRUE(st.contains(t));
  EXPECT_EQ(st.size(), 1u);
  EXPECT_TRUE(st.erase(t));
  EXPECT_FALSE(st.erase(t));
  EXPECT_TRUE(st.empty());
  EXPECT_TRUE(st.match(std::nullopt, std::nullopt, std::nullopt).empty());
}

TEST(TripleStore, EveryIndexAgreesWithBruteForce) {
  std::mt19937_64 rng(99);
  const auto v = vocabulary(40);
  for (int rep = 0; rep < 20; ++rep) {
    TripleStore st;
    std::set<r::Triple> ref;
    for (int i = 0; i < 600; ++i) {
      const auto t = random_triple(rng, v);
      EXPECT_EQ(st.insert(t), ref.insert(t).second);
    }
    for (int i = 0; i < 100; ++i) {
      const auto t = random_triple(rng, v);
      EXPECT_EQ(st.erase(t), ref.erase(t) == 1);
    }
    ASSERT_EQ(st.size(), ref.size());
    EXPECT_EQ(st.triples(), std::vector<r::Triple>(ref.begin(), ref.end()));
    for (int q = 0; q < 200; ++q) {
      const auto t = random_triple(rng, v);
      const int mask = q % 8;
      const std::optional<r::Term> s = mask & 1 ? std::optional(t.s) : std::nullopt;
      const std::optional<r::Term> p = mask & 2 ? std::optional(t.p) : std::nullopt;
      const std::optional<r::Term> o = mask & 4 ? std::optional(t.o) : std::nullopt;
      const auto want = brute(ref, s, p, o);
      EXPECT_EQ(sorted(st.match(s, p, o)), want);
      for (auto idx : {TripleStore::Index::spo, TripleStore::Index::pos, TripleStore::Index::osp}) {
        EXPECT_EQ(sorted(st.match_via(idx, s, p, o)), want);
      }
    }
  }
}

TEST(TripleStore, UnknownTermsMatchNothing) {
  TripleStore st;
  st.insert({r::Term::iri("urn:s"), r::Term::iri("urn:p"), r::Term::iri("urn:o")});
  EXPECT_TRUE(st.match(r::Term::iri("urn:zzz"), std::nullopt, std::nullopt).empty());
  EXPECT_FALSE(st.contains({r::Term::iri("urn:s"), r::Term::iri("urn:p"), r::Term::literal("urn:o")}));
}

TEST(TripleStore, NTriplesRoundTripAndCounts) {
  TripleStore st;
  const std::string doc =
      "<urn:b> <urn:p> \"x\" .\n"
      "<urn:a> <urn:p> <urn:b> .\n"
      "<urn:a> <urn:q> \"x\" .\n";
  EXPECT_EQ(st.load_ntriples(doc), 3u);
  EXPECT_EQ(st.load_ntriples(doc), 0u);
  EXPECT_EQ(st.predicate_count(), 2u);
  EXPECT_EQ(st.node_count(), 3u);  // urn:a, urn:b, "x"
  EXPECT_EQ(st.to_ntriples(),
            "<urn:a> <urn:p> <urn:b> .\n<urn:a> <urn:q> \"x\" .\n<urn:b> <urn:p> \"x\" .\n");
  TripleStore copy = st;
  EXPECT_EQ(copy.triples(), st.triples());
}

TEST(TripleStore, ConcurrentReadersSeeConsistentState) {
  TripleStore st;
  const auto v = vocabulary(30);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) st.insert(random_triple(rng, v));
  const std::size_t initial = st.size();
  std::vector<std::thread> readers;
  std::atomic<bool> ok{true};
  for (int k = 0; k < 4; ++k) {
    readers.emplace_back([&] {
      for (int i = 0; i < 200; ++i) {
        const auto all = st.match(std::nullopt, std::nullopt, std::nullopt);
        if (all.size() < initial) ok = false;
        for (const auto& t : st.match(std::nullopt, v[1], std::nullopt)) {
          if (t.p != v[1]) ok = false;
        }
      }
    });
  }
  std::mt19937_64 wrng(2);
  for (int i = 0; i < 500; ++i) st.insert(random_triple(wrng, v));
  for (auto& t : readers) t.join();
  EXPECT_TRUE(ok);
}
