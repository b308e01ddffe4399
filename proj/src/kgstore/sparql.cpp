#include "elkg/sparql.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "elkg/error.hpp"
#include "elkg/text.hpp"

namespace elkg::sparql {

using rdf::Term;

// ---------------------------------------------------------------------------
// Parser

namespace {

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         static_cast<unsigned char>(c) >= 0x80;
}

const std::set<std::string>& unsupported_keywords() {
  static const std::set<std::string> k{
      "OPTIONAL", "UNION", "MINUS",  "GRAPH",  "SERVICE", "BIND",     "VALUES",
      "ORDER",    "GROUP", "HAVING", "OFFSET", "CONSTRUCT", "ASK",    "DESCRIBE",
      "INSERT",   "DELETE", "FROM",  "BASE",   "NOT",     "EXISTS",   "REDUCED",
      "LOAD",     "CLEAR", "DROP",   "CREATE", "WITH",    "USING",    "AS"};
  return k;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Query parse() {
    ws();
    while (keyword_ahead("PREFIX")) prefix_decl();
    if (!keyword_ahead("SELECT")) unsupported_or("expected SELECT");
    take_keyword();
    if (keyword_ahead("DISTINCT")) {
      take_keyword();
      q_.distinct = true;
    }
    if (peek() == '*') {
      ++pos_;
      ws();
      q_.select_all = true;
    } else {
      while (peek() == '?' || peek() == '$') q_.projection.push_back(var_name());
      if (peek() == '(') fail("unsupported construct: SELECT expressions");
      if (q_.projection.empty()) unsupported_or("expected variables or '*' after SELECT");
    }
    if (keyword_ahead("WHERE")) take_keyword();
    expect('{');
    group();
    expect('}');
    if (keyword_ahead("LIMIT")) {
      take_keyword();
      const std::size_t start = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      if (start == pos_) fail("expected integer after LIMIT");
      q_.limit = std::stoull(std::string(s_.substr(start, pos_ - start)));
      ws();
    }
    if (!at_end()) unsupported_or("unexpected trailing content");
    if (q_.select_all) {
      std::set<std::string> seen;
      auto add = [&](const PatternTerm& t) {
        if (auto* v = std::get_if<Var>(&t); v && seen.insert(v->name).second) {
          q_.projection.push_back(v->name);
        }
      };
      for (const auto& p : q_.patterns) {
        add(p.s);
        add(p.p);
        add(p.o);
      }
    }
    return std::move(q_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) {
      if (s_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(what, line, col);
  }

  // Names the construct when the next word is a known unsupported keyword.
  [[noreturn]] void unsupported_or(const std::string& what) const {
    std::size_t end = pos_;
    while (end < s_.size() && std::isalpha(static_cast<unsigned char>(s_[end]))) ++end;
    const std::string word = to_upper(s_.substr(pos_, end - pos_));
    if (unsupported_keywords().count(word)) fail("unsupported construct: " + word);
    fail(what);
  }

  static std::string to_upper(std::string_view w) {
    std::string out(w);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0';
  }

  void ws() {
    while (!at_end()) {
      const char c = s_[pos_];
      if (c == '#') {
        while (!at_end() && s_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    if (peek() != c) unsupported_or(std::string("expected '") + c + "'");
    ++pos_;
    ws();
  }

  std::size_t word_end() const {
    std::size_t end = pos_;
    while (end < s_.size() && std::isalpha(static_cast<unsigned char>(s_[end]))) ++end;
    return end;
  }

  bool keyword_ahead(std::string_view kw) const {
    const std::size_t end = word_end();
    if (end - pos_ != kw.size()) return false;
    if (end < s_.size() && (name_char(s_[end]) || s_[end] == ':')) return false;
    return to_upper(s_.substr(pos_, end - pos_)) == kw;
  }

  void take_keyword() {
    pos_ = word_end();
    ws();
  }

  void prefix_decl() {
    take_keyword();
    const std::size_t start = pos_;
    while (name_char(peek()) || peek() == '.') ++pos_;
    if (peek() != ':') fail("expected ':' in PREFIX declaration");
    const std::string prefix(s_.substr(start, pos_ - start));
    ++pos_;
    ws();
    q_.prefixes.add(prefix, iri_ref());
    ws();
  }

  std::string iri_ref() {
    if (peek() != '<') fail("expected IRI");
    ++pos_;
    const std::size_t start = pos_;
    while (!at_end() && s_[pos_] != '>') {
      const char c = s_[pos_];
      if (c == ' ' || c == '\n' || c == '"' || c == '{' || c == '}' || c == '<') fail("malformed IRI");
      ++pos_;
    }
    if (at_end()) fail("unterminated IRI");
    std::string iri(s_.substr(start, pos_ - start));
    ++pos_;
    if (!rdf::is_absolute_iri(iri)) fail("relative IRI <" + iri + "> is not supported");
    return iri;
  }

  std::string var_name() {
    ++pos_;  // ? or $
    const std::size_t start = pos_;
    while (name_char(peek()) && peek() != '-') ++pos_;
    if (start == pos_) fail("empty variable name");
    std::string name(s_.substr(start, pos_ - start));
    ws();
    return name;
  }

  std::string prefixed_name() {
    const std::size_t start = pos_;
    while (name_char(peek()) || (peek() == '.' && name_char(peek(1)))) ++pos_;
    if (peek() != ':') {
      pos_ = start;
      unsupported_or("expected a term");
    }
    const std::string prefix(s_.substr(start, pos_ - start));
    ++pos_;
    const std::size_t lstart = pos_;
    while (name_char(peek()) || (peek() == '.' && name_char(peek(1)))) ++pos_;
    const std::string local(s_.substr(lstart, pos_ - lstart));
    auto it = q_.prefixes.entries().find(prefix);
    if (it == q_.prefixes.entries().end()) {
      pos_ = start;
      fail("undeclared prefix '" + prefix + ":'");
    }
    return it->second + local;
  }

  std::string string_body() {
    const char quote = peek();
    ++pos_;
    std::string out;
    while (true) {
      if (at_end() || s_[pos_] == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == quote) break;
      if (c == '\\') {
        const char e = peek();
        ++pos_;
        switch (e) {
          case 't': out.push_back('\t'); break;
          case 'n': out.push_back('\n'); break;
          case 'r': out.push_back('\r'); break;
          case 'b': out.push_back('\b'); break;
          case 'f': out.push_back('\f'); break;
          case '"': out.push_back('"'); break;
          case '\'': out.push_back('\''); break;
          case '\\': out.push_back('\\'); break;
          default: fail("unsupported escape in string");
        }
        continue;
      }
      out.push_back(c);
    }
    return out;
  }

  Term literal() {
    std::string lex = string_body();
    if (peek() == '@') {
      ++pos_;
      const std::size_t start = pos_;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '-') ++pos_;
      if (start == pos_) fail("empty language tag");
      std::string lang(s_.substr(start, pos_ - start));
      ws();
      return Term::lang_literal(std::move(lex), std::move(lang));
    }
    if (peek() == '^' && peek(1) == '^') {
      pos_ += 2;
      std::string dt = peek() == '<' ? iri_ref() : prefixed_name();
      ws();
      return Term::literal(std::move(lex), std::move(dt));
    }
    ws();
    return Term::literal(std::move(lex));
  }

  Term number() {
    const std::size_t start = pos_;
    if (peek() == '+' || peek() == '-') ++pos_;
    bool dot = false, exp = false;
    while (true) {
      const char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' && !dot && !exp && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        dot = true;
        ++pos_;
      } else if ((c == 'e' || c == 'E') && !exp) {
        exp = true;
        ++pos_;
        if (peek() == '+' || peek() == '-') ++pos_;
      } else {
        break;
      }
    }
    std::string lex(s_.substr(start, pos_ - start));
    if (!parse_double(lex)) fail("malformed number");
    ws();
    return Term::literal(std::move(lex), rdf::xsd(exp ? "double" : dot ? "decimal" : "integer"));
  }

  PatternTerm term(bool predicate) {
    const char c = peek();
    if (c == '?' || c == '$') return Var{var_name()};
    if (c == '<') {
      Term t = Term::iri(iri_ref());
      ws();
      check_path();
      return t;
    }
    if (predicate) {
      if (c == 'a' && !name_char(peek(1)) && peek(1) != ':') {
        ++pos_;
        ws();
        return Term::iri(rdf::rdf_type());
      }
      if (c == '^' || c == '!' || c == '(') fail("unsupported construct: property path");
      Term t = Term::iri(prefixed_name());
      ws();
      check_path();
      return t;
    }
    if (c == '"' || c == '\'') return literal();
    if (c == '_' && peek(1) == ':') fail("unsupported construct: blank node");
    if (c == '[') fail("unsupported construct: blank node");
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-') return number();
    if (keyword_ahead("TRUE") || keyword_ahead("FALSE")) {
      const bool v = keyword_ahead("TRUE");
      take_keyword();
      return Term::literal(v ? "true" : "false", rdf::xsd("boolean"));
    }
    Term t = Term::iri(prefixed_name());
    ws();
    return t;
  }

  void check_path() {
    const char c = peek();
    if (c == '/' || c == '|' || c == '*' || c == '+' || (c == '?' && !name_char(peek(1)))) {
      fail("unsupported construct: property path");
    }
  }

  void group() {
    while (!at_end() && peek() != '}') {
      if (peek() == '{') fail("unsupported construct: nested group");
      if (keyword_ahead("FILTER")) {
        take_keyword();
        filter();
        if (peek() == '.') expect('.');
        continue;
      }
      {
        const std::size_t end = word_end();
        const std::string word = to_upper(s_.substr(pos_, end - pos_));
        if (unsupported_keywords().count(word) &&
            !(end < s_.size() && (s_[end] == ':' || name_char(s_[end])))) {
          fail("unsupported construct: " + word);
        }
      }
      PatternTerm subject = term(false);
      while (true) {
        PatternTerm pred = term(true);
        while (true) {
          PatternTerm obj = term(false);
          q_.patterns.push_back({subject, pred, obj});
          if (peek() != ',') break;
          expect(',');
        }
        if (peek() != ';') break;
        expect(';');
        if (peek() == '.' || peek() == '}') break;
      }
      if (peek() == '.') expect('.');
      else if (peek() != '}' && !keyword_ahead("FILTER")) unsupported_or("expected '.' or '}'");
    }
  }

  Operand operand() {
    Operand op;
    const char c = peek();
    if (c == '?' || c == '$') {
      op.kind = Operand::Kind::var;
      op.var = var_name();
      return op;
    }
    if (keyword_ahead("LANG")) {
      take_keyword();
      expect('(');
      if (peek() != '?' && peek() != '$') fail("LANG expects a variable");
      op.kind = Operand::Kind::lang;
      op.var = var_name();
      expect(')');
      return op;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t end = word_end();
      if (end < s_.size() && s_[end] == '(') {
        fail("unsupported construct: function " + to_upper(s_.substr(pos_, end - pos_)));
      }
    }
    op.kind = Operand::Kind::term;
    PatternTerm t = term(false);
    op.term = std::get<Term>(t);
    return op;
  }

  CmpOp comparator() {
    const char c = peek();
    const char d = peek(1);
    CmpOp op;
    std::size_t len = 1;
    if (c == '=') op = CmpOp::eq;
    else if (c == '!' && d == '=') op = CmpOp::ne, len = 2;
    else if (c == '<' && d == '=') op = CmpOp::le, len = 2;
    else if (c == '>' && d == '=') op = CmpOp::ge, len = 2;
    else if (c == '<') op = CmpOp::lt;
    else if (c == '>') op = CmpOp::gt;
    else fail("expected a comparison operator");
    pos_ += len;
    ws();
    return op;
  }

  void filter() {
    expect('(');
    Filter f;
    while (true) {
      Comparison cmp;
      if (peek() == '(') fail("unsupported construct: nested filter expression");
      if (peek() == '!') fail("unsupported construct: negation");
      cmp.lhs = operand();
      cmp.op = comparator();
      cmp.rhs = operand();
      f.all.push_back(std::move(cmp));
      if (peek() == '&' && peek(1) == '&') {
        pos_ += 2;
        ws();
        continue;
      }
      if (peek() == '|' && peek(1) == '|') fail("unsupported construct: ||");
      break;
    }
    expect(')');
    q_.filters.push_back(std::move(f));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  Query q_;
};

}  // namespace

Query parse_query(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Filter semantics

namespace {

bool numeric_type(const std::string& dt) {
  static const std::set<std::string> k = [] {
    std::set<std::string> s;
    for (const char* n : {"integer", "decimal", "double", "float", "int", "long", "short", "byte",
                          "nonNegativeInteger", "positiveInteger", "negativeInteger",
                          "nonPositiveInteger", "unsignedInt", "unsignedLong", "unsignedShort",
                          "unsignedByte"}) {
      s.insert(rdf::xsd(n));
    }
    return s;
  }();
  return k.count(dt) > 0;
}

std::optional<double> numeric_value(const Term& t) {
  if (!t.is_literal() || !numeric_type(t.datatype)) return std::nullopt;
  return parse_double(t.value);
}

bool plain_string(const Term& t) { return t.is_literal() && t.datatype == rdf::xsd_string(); }

template <class T>
bool apply(CmpOp op, const T& a, const T& b) {
  switch (op) {
    case CmpOp::eq: return a == b;
    case CmpOp::ne: return a != b;
    case CmpOp::lt: return a < b;
    case CmpOp::le: return a <= b;
    case CmpOp::gt: return a > b;
    case CmpOp::ge: return a >= b;
  }
  return false;
}

}  // namespace

bool compare_terms(const Term& a, CmpOp op, const Term& b) {
  const auto na = numeric_value(a);
  const auto nb = numeric_value(b);
  if (na && nb) return apply(op, *na, *nb);
  if (plain_string(a) && plain_string(b)) return apply(op, a.value, b.value);
  if (op == CmpOp::eq) return a == b;
  if (op == CmpOp::ne) return a != b;
  return false;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct Compiled {
  std::vector<std::string> names;
  std::map<std::string, std::size_t> index;

  std::size_t id(const std::string& name) {
    auto [it, added] = index.try_emplace(name, names.size());
    if (added) names.push_back(name);
    return it->second;
  }
};

using Binding = std::vector<std::optional<Term>>;

std::optional<Term> resolve(const Operand& op, const Binding& b, const Compiled& c) {
  switch (op.kind) {
    case Operand::Kind::term: return op.term;
    case Operand::Kind::var: {
      auto it = c.index.find(op.var);
      if (it == c.index.end()) return std::nullopt;
      return b[it->second];
    }
    case Operand::Kind::lang: {
      auto it = c.index.find(op.var);
      if (it == c.index.end() || !b[it->second] || !b[it->second]->is_literal()) return std::nullopt;
      return Term::literal(b[it->second]->lang);
    }
  }
  return std::nullopt;
}

bool holds(const Filter& f, const Binding& b, const Compiled& c) {
  for (const auto& cmp : f.all) {
    auto l = resolve(cmp.lhs, b, c);
    auto r = resolve(cmp.rhs, b, c);
    if (!l || !r || !compare_terms(*l, cmp.op, *r)) return false;
  }
  return true;
}

std::vector<std::string> filter_vars(const Filter& f) {
  std::vector<std::string> v;
  for (const auto& cmp : f.all) {
    for (const Operand* op : {&cmp.lhs, &cmp.rhs}) {
      if (op->kind != Operand::Kind::term) v.push_back(op->var);
    }
  }
  return v;
}

}  // namespace

Results evaluate(const Query& q, const kgstore::TripleStore& store) {
  Compiled c;
  for (const auto& p : q.patterns) {
    for (const PatternTerm* t : {&p.s, &p.p, &p.o}) {
      if (auto* v = std::get_if<Var>(t)) c.id(v->name);
    }
  }
  const std::size_t pattern_vars = c.names.size();

  // Greedy join order: most bound positions first, original order on ties.
  std::vector<std::size_t> order;
  {
    std::vector<bool> used(q.patterns.size(), false);
    std::set<std::string> bound;
    for (std::size_t step = 0; step < q.patterns.size(); ++step) {
      int best_score = -1;
      std::size_t best = 0;
      for (std::size_t i = 0; i < q.patterns.size(); ++i) {
        if (used[i]) continue;
        int score = 0;
        for (const PatternTerm* t : {&q.patterns[i].s, &q.patterns[i].p, &q.patterns[i].o}) {
          const auto* v = std::get_if<Var>(t);
          score += (!v || bound.count(v->name)) ? 1 : 0;
        }
        if (score > best_score) {
          best_score = score;
          best = i;
        }
      }
      used[best] = true;
      order.push_back(best);
      for (const PatternTerm* t : {&q.patterns[best].s, &q.patterns[best].p, &q.patterns[best].o}) {
        if (auto* v = std::get_if<Var>(t)) bound.insert(v->name);
      }
    }
  }

  // Each filter runs at the first depth where its variables are bound;
  // filters on variables no pattern binds can never hold.
  std::vector<std::vector<const Filter*>> filters_at(q.patterns.size() + 1);
  bool impossible = false;
  {
    std::vector<std::size_t> bound_at(pattern_vars, 0);
    std::set<std::string> bound;
    for (std::size_t d = 0; d < order.size(); ++d) {
      const auto& p = q.patterns[order[d]];
      for (const PatternTerm* t : {&p.s, &p.p, &p.o}) {
        if (auto* v = std::get_if<Var>(t); v && bound.insert(v->name).second) {
          bound_at[c.index.at(v->name)] = d + 1;
        }
      }
    }
    for (const auto& f : q.filters) {
      std::size_t depth = 0;
      for (const auto& v : filter_vars(f)) {
        auto it = c.index.find(v);
        if (it == c.index.end()) {
          impossible = true;
          break;
        }
        depth = std::max(depth, bound_at[it->second]);
      }
      filters_at[depth].push_back(&f);
    }
  }

  for (const auto& v : q.projection) c.id(v);
  Results r;
  r.vars = q.projection;
  if (impossible) return r;

  std::vector<std::size_t> proj;
  for (const auto& v : q.projection) proj.push_back(c.index.at(v));

  Binding b(c.names.size());
  auto check = [&](std::size_t depth) {
    for (const Filter* f : filters_at[depth]) {
      if (!holds(*f, b, c)) return false;
    }
    return true;
  };

  auto emit = [&] {
    std::vector<std::optional<Term>> row;
    row.reserve(proj.size());
    for (std::size_t i : proj) row.push_back(b[i]);
    r.rows.push_back(std::move(row));
  };

  auto value = [&](const PatternTerm& t) -> std::optional<Term> {
    if (auto* term = std::get_if<Term>(&t)) return *term;
    return b[c.index.at(std::get<Var>(t).name)];
  };

  // Depth-first nested-loop join over the ordered patterns.
  auto solve = [&](auto&& self, std::size_t depth) -> void {
    if (depth == order.size()) {
      emit();
      return;
    }
    const TriplePattern& p = q.patterns[order[depth]];
    const auto s = value(p.s), pr = value(p.p), o = value(p.o);
    for (const auto& t : store.match(s, pr, o)) {
      std::vector<std::size_t> newly;
      bool ok = true;
      auto bind = [&](const PatternTerm& pt, const Term& v) {
        const auto* var = std::get_if<Var>(&pt);
        if (!var) return;
        auto& slot = b[c.index.at(var->name)];
        if (!slot) {
          slot = v;
          newly.push_back(c.index.at(var->name));
        } else if (*slot != v) {
          ok = false;  // repeated variable inside one pattern
        }
      };
      bind(p.s, t.s);
      if (ok) bind(p.p, t.p);
      if (ok) bind(p.o, t.o);
      if (ok && check(depth + 1)) self(self, depth + 1);
      for (std::size_t i : newly) b[i].reset();
    }
  };
  if (check(0)) solve(solve, 0);

  std::sort(r.rows.begin(), r.rows.end());
  if (q.distinct) r.rows.erase(std::unique(r.rows.begin(), r.rows.end()), r.rows.end());
  if (q.limit && r.rows.size() > *q.limit) r.rows.resize(*q.limit);
  return r;
}

// ---------------------------------------------------------------------------
// JSON results

using nlohmann::json;

json results_to_json(const Results& r) {
  json bindings = json::array();
  for (const auto& row : r.rows) {
    json b = json::object();
    for (std::size_t i = 0; i < r.vars.size(); ++i) {
      if (!row[i]) continue;
      const Term& t = *row[i];
      if (t.is_iri()) {
        if (t.value.rfind("_:", 0) == 0) {
          b[r.vars[i]] = {{"type", "bnode"}, {"value", t.value.substr(2)}};
        } else {
          b[r.vars[i]] = {{"type", "uri"}, {"value", t.value}};
        }
      } else {
        json lit = {{"type", "literal"}, {"value", t.value}};
        if (!t.lang.empty()) lit["xml:lang"] = t.lang;
        else if (t.datatype != rdf::xsd_string()) lit["datatype"] = t.datatype;
        b[r.vars[i]] = lit;
      }
    }
    bindings.push_back(b);
  }
  return {{"head", {{"vars", r.vars}}}, {"results", {{"bindings", bindings}}}};
}

Results results_from_json(const json& j) {
  Results r;
  try {
    r.vars = j.at("head").at("vars").get<std::vector<std::string>>();
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < r.vars.size(); ++i) idx[r.vars[i]] = i;
    for (const auto& b : j.at("results").at("bindings")) {
      std::vector<std::optional<Term>> row(r.vars.size());
      for (const auto& [name, v] : b.items()) {
        auto it = idx.find(name);
        if (it == idx.end()) throw FormatError("sparql results", "binding for undeclared variable " + name);
        const std::string type = v.at("type").get<std::string>();
        const std::string value = v.at("value").get<std::string>();
        if (type == "uri") {
          row[it->second] = Term::iri(value);
        } else if (type == "literal" || type == "typed-literal") {
          if (v.contains("xml:lang")) {
            row[it->second] = Term::lang_literal(value, v["xml:lang"].get<std::string>());
          } else {
            row[it->second] = Term::literal(value, v.value("datatype", rdf::xsd_string()));
          }
        } else if (type == "bnode") {
          row[it->second] = Term::iri("_:" + value);
        } else {
          throw FormatError("sparql results", "unknown binding type '" + type + "'");
        }
      }
      r.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw FormatError("sparql results", e.what());
  }
  return r;
}

}  // namespace elkg::sparql
