#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace elkg::rdf {

namespace ns {
inline constexpr std::string_view rdf = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view xsd = "http://www.w3.org/2001/XMLSchema#";
inline constexpr std::string_view owl = "http://www.w3.org/2002/07/owl#";
inline constexpr std::string_view schema = "https://schema.org/";
inline constexpr std::string_view saref = "https://saref.etsi.org/core/";
inline constexpr std::string_view voc = "https://elkg.example.org/voc/";
inline constexpr std::string_view res = "https://elkg.example.org/resource/";
}  // namespace ns

std::string rdf_type();
std::string owl_same_as();
std::string xsd(std::string_view local);  // xsd("decimal")
std::string xsd_string();
std::string rdf_lang_string();

/// IRI-safe percent-encoding of a template value: unreserved characters
/// (ALPHA / DIGIT / "-" / "." / "_" / "~") kept, every other UTF-8 byte %XX.
std::string percent_encode(std::string_view value);

/// scheme ":" rest, with no characters N-Triples forbids inside <...>.
bool is_absolute_iri(std::string_view iri);

enum class TermKind : unsigned char { iri, literal };

struct Term {
  TermKind kind = TermKind::iri;
  std::string value;     // IRI or lexical form
  std::string datatype;  // literals only
  std::string lang;      // lowercase; datatype is rdf:langString when set

  static Term iri(std::string value);
  static Term literal(std::string lexical, std::string datatype = xsd_string());
  static Term lang_literal(std::string lexical, std::string lang);

  bool is_iri() const noexcept { return kind == TermKind::iri; }
  bool is_literal() const noexcept { return kind == TermKind::literal; }

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;
};

struct Triple {
  Term s;
  Term p;
  Term o;
  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

using TripleSet = std::set<Triple>;

/// One N-Triples term in canonical form.
std::string to_ntriples(const Term& t);
/// One line without the trailing newline.
std::string to_ntriples(const Triple& t);

/// Canonical document: one triple per line, lines sorted bytewise, duplicates
/// dropped, every line newline-terminated. Empty input gives empty text.
std::string serialize_ntriples(const TripleSet& triples);
std::string serialize_ntriples(const std::vector<Triple>& triples);

/// Throws ParseError(line, column) on malformed input. Blank nodes are
/// rejected since the pipeline never produces them.
std::vector<Triple> parse_ntriples(std::string_view text);

/// CURIE expansion against declared prefixes.
class PrefixMap {
 public:
  /// schema, saref, voc, owl, rdf, rdfs, xsd, res.
  static PrefixMap defaults();

  void add(std::string prefix, std::string iri) { map_[std::move(prefix)] = std::move(iri); }
  const std::map<std::string, std::string>& entries() const noexcept { return map_; }

  /// "schema:name" -> full IRI; an absolute IRI in <...> or with "://" is
  /// returned unchanged. nullopt when the prefix is undeclared.
  std::optional<std::string> expand(std::string_view curie) const;

 private:
  std::map<std::string, std::string> map_;
};

}  // namespace elkg::rdf
