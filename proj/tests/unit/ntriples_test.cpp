#include <gtest/gtest.h>

#include <random>

#include "elkg/error.hpp"
#include "elkg/rdf.hpp"

namespace r = elkg::rdf;

namespace {

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "a", "Z", "0", " ", "\"", "\\", "\n", "\r", "\t", "\b", "\f", std::string(1, '\x01'),
      std::string(1, '\x7f'), "é", "日本", "\xF0\x9F\x98\x80", "<", ">", "#", ".", "_:b0", "@en"};
  std::string s;
  const int n = std::uniform_int_distribution<int>(0, 12)(rng);
  for (int i = 0; i < n; ++i) {
    s += pieces[std::uniform_int_distribution<std::size_t>(0, pieces.size() - 1)(rng)];
  }
  return s;
}

r::Term random_iri(std::mt19937_64& rng) {
  static const std::vector<std::string> bases = {"https://elkg.example.org/resource/",
                                                 "http://www.wikidata.org/entity/Q",
                                                 "urn:x:", "https://schema.org/"};
  std::string iri = bases[std::uniform_int_distribution<std::size_t>(0, bases.size() - 1)(rng)];
  iri += r::percent_encode(random_text(rng));
  iri += "é";
  return r::Term::iri(iri);
}

r::Term random_object(std::mt19937_64& rng) {
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: return random_iri(rng);
    case 1: return r::Term::literal(random_text(rng));
    case 2: return r::Term::lang_literal(random_text(rng), rng() % 2 ? "en" : "de-CH");
    default: return r::Term::literal(std::to_string(rng() % 1000), r::xsd("integer"));
  }
}

}  // namespace

TEST(NTriples, RandomRoundTrip) {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 10000; ++i) {
    r::TripleSet set;
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int k = 0; k < n; ++k) set.insert({random_iri(rng), random_iri(rng), random_object(rng)});
    const std::string text = r::serialize_ntriples(set);
    const auto back = r::parse_ntriples(text);
    ASSERT_EQ(r::TripleSet(back.begin(), back.end()), set) << text;
    ASSERT_EQ(r::serialize_ntriples(back), text);
  }
}

TEST(NTriples, CanonicalForm) {
  const auto a = r::Term::iri("urn:a");
  const auto b = r::Term::iri("urn:b");
  std::vector<r::Triple> ts = {{b, a, r::Term::literal("x")}, {a, a, r::Term::literal("1", r::xsd("integer"))},
                               {b, a, r::Term::literal("x")}};
  EXPECT_EQ(r::serialize_ntriples(ts),
            "<urn:a> <urn:a> \"1\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n"
            "<urn:b> <urn:a> \"x\" .\n");
  EXPECT_EQ(r::serialize_ntriples(std::vector<r::Triple>{}), "");
  EXPECT_EQ(r::to_ntriples(r::Term::lang_literal("Londres", "FR")), "\"Londres\"@fr");
  EXPECT_EQ(r::to_ntriples(r::Term::literal("a\"b\\c\nd\x01")), "\"a\\\"b\\\\c\\nd\\u0001\"");
}

TEST(NTriples, ParsesEscapesCommentsAndBlankLines) {
  const auto ts = r::parse_ntriples(
      "# header\n"
      "\n"
      "<urn:s>\t<urn:p>  \"A\\u00e9\\U0001F600\\'\" . # trailing\n"
      "<urn:s> <urn:p> <urn:\\u0041> .\r\n"
      "<urn:s> <urn:p> \"x\"^^<http://www.w3.org/2001/XMLSchema#string> .");
  ASSERT_EQ(ts.size(), 3u);
  EXPECT_EQ(ts[0].o.value, "A\xC3\xA9\xF0\x9F\x98\x80'");
  EXPECT_EQ(ts[1].o.value, "urn:A");
  EXPECT_EQ(ts[2].o, r::Term::literal("x"));
}

TEST(NTriples, RejectsMalformedInputWithPosition) {
  const std::vector<std::string> bad = {
      "<urn:s> <urn:p> <urn:o>",              // no dot
      "_:b <urn:p> <urn:o> .",                // blank subject
      "<urn:s> <urn:p> _:b .",                // blank object
      "<urn:s> \"p\" <urn:o> .",              // literal predicate
      "<s> <urn:p> <urn:o> .",                // relative IRI
      "<urn:s> <urn:p> \"open .",             // unterminated literal
      "<urn:s> <urn:p> \"\\q\" .",            // bad escape
      "<urn:s> <urn:p> \"\\uD800\" .",        // surrogate
      "<urn:s> <urn:p> \"x\"@ .",             // empty language
      "<urn:s> <urn:p> <urn:o> . extra",      // trailing content
      "<urn:s x> <urn:p> <urn:o> .",          // space in IRI
  };
  for (const auto& line : bad) {
    try {
      r::parse_ntriples("<urn:ok> <urn:ok> <urn:ok> .\n" + line + "\n");
      ADD_FAILURE() << "accepted: " << line;
    } catch (const elkg::ParseError& e) {
      EXPECT_EQ(e.line(), 2u) << line;
      EXPECT_GE(e.column(), 1u) << line;
    }
  }
}

TEST(NTriples, PercentEncodingAndPrefixes) {
  EXPECT_EQ(r::percent_encode("FIXA_house 2/é~.-"), "FIXA_house%202%2F%C3%A9~.-");
  EXPECT_TRUE(r::is_absolute_iri("https://x.org/a"));
  EXPECT_FALSE(r::is_absolute_iri("a/b"));
  EXPECT_FALSE(r::is_absolute_iri("urn:a b"));
  const auto pm = r::PrefixMap::defaults();
  EXPECT_EQ(pm.expand("schema:name"), "https://schema.org/name");
  EXPECT_EQ(pm.expand("<urn:x>"), "urn:x");
  EXPECT_EQ(pm.expand("nope:x"), std::nullopt);
}
