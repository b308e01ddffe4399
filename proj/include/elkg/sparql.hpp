#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "elkg/rdf.hpp"
#include "elkg/triple_store.hpp"

namespace elkg::sparql {

struct Var {
  std::string name;
  bool operator==(const Var&) const = default;
};

using PatternTerm = std::variant<Var, rdf::Term>;

struct TriplePattern {
  PatternTerm s;
  PatternTerm p;
  PatternTerm o;
};

enum class CmpOp { eq, ne, lt, le, gt, ge };

struct Operand {
  enum class Kind { var, term, lang } kind = Kind::term;
  std::string var;  // var and lang
  rdf::Term term;   // term
};

struct Comparison {
  Operand lhs;
  CmpOp op = CmpOp::eq;
  Operand rhs;
};

/// One FILTER: a conjunction of comparisons.
struct Filter {
  std::vector<Comparison> all;
};

/// The supported query subset: PREFIX, SELECT [DISTINCT] vars|*, a basic
/// graph pattern (with `a`, `;` and `,` abbreviations), FILTERs made of
/// comparisons joined by `&&` (operands: variables, terms, LANG(?v)), and
/// LIMIT.
struct Query {
  rdf::PrefixMap prefixes;
  bool distinct = false;
  bool select_all = false;
  std::vector<std::string> projection;  // resolved for SELECT * too
  std::vector<TriplePattern> patterns;
  std::vector<Filter> filters;
  std::optional<std::size_t> limit;
};

struct Results {
  std::vector<std::string> vars;
  std::vector<std::vector<std::optional<rdf::Term>>> rows;
  bool operator==(const Results&) const = default;
};

/// Throws ParseError(line, column) naming unsupported constructs
/// (OPTIONAL, UNION, property paths, functions other than LANG, ...).
Query parse_query(std::string_view text);

/// Rows sorted by binding (unbound first, then Term order); DISTINCT dedupes
/// before LIMIT.
Results evaluate(const Query& query, const kgstore::TripleStore& store);

inline Results bgp_query(std::string_view text, const kgstore::TripleStore& store) {
  return evaluate(parse_query(text), store);
}

/// Comparison of two bound terms under the filter semantics: numeric
/// literals compare by value, string literals lexically, anything else by
/// term identity (only = and != apply).
bool compare_terms(const rdf::Term& a, CmpOp op, const rdf::Term& b);

/// SPARQL 1.1 Query Results JSON.
nlohmann::json results_to_json(const Results& r);
/// Throws FormatError on malformed documents.
Results results_from_json(const nlohmann::json& j);

}  // namespace elkg::sparql
