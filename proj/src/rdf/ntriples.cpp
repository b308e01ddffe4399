#include <algorithm>
#include <cstdint>

#include "elkg/error.hpp"
#include "elkg/rdf.hpp"
#include "elkg/text.hpp"

namespace elkg::rdf {

std::string rdf_type() { return std::string(ns::rdf) + "type"; }
std::string owl_same_as() { return std::string(ns::owl) + "sameAs"; }
std::string xsd(std::string_view local) { return std::string(ns::xsd) + std::string(local); }
std::string xsd_string() { return xsd("string"); }
std::string rdf_lang_string() { return std::string(ns::rdf) + "langString"; }

std::string percent_encode(std::string_view value) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(value.size());
  for (unsigned char c : value) {
    const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                            (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' ||
                            c == '~';
    if (unreserved) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

namespace {

bool forbidden_in_iri(unsigned char c) {
  return c <= 0x20 || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' ||
         c == '^' || c == '`' || c == '\\';
}

bool alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

bool is_absolute_iri(std::string_view iri) {
  const std::size_t colon = iri.find(':');
  if (colon == std::string_view::npos || colon == 0 || !alpha(iri[0])) return false;
  for (std::size_t i = 1; i < colon; ++i) {
    const char c = iri[i];
    if (!alpha(c) && !digit(c) && c != '+' && c != '-' && c != '.') return false;
  }
  return std::none_of(iri.begin(), iri.end(),
                      [](char c) { return forbidden_in_iri(static_cast<unsigned char>(c)); });
}

Term Term::iri(std::string value) { return {TermKind::iri, std::move(value), {}, {}}; }

Term Term::literal(std::string lexical, std::string datatype) {
  return {TermKind::literal, std::move(lexical), std::move(datatype), {}};
}

Term Term::lang_literal(std::string lexical, std::string lang) {
  return {TermKind::literal, std::move(lexical), rdf_lang_string(), to_lower(lang)};
}

std::string to_ntriples(const Term& t) {
  std::string out;
  out.reserve(t.value.size() + 2);
  if (t.is_iri()) {
    out.push_back('<');
    out += t.value;
    out.push_back('>');
    return out;
  }
  out.push_back('"');
  for (unsigned char c : t.value) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20 || c == 0x7F) {
          static constexpr char kHex[] = "0123456789ABCDEF";
          out += "\\u00";
          out.push_back(kHex[c >> 4]);
          out.push_back(kHex[c & 15]);
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out.push_back('"');
  if (!t.lang.empty()) {
    out.push_back('@');
    out += t.lang;
  } else if (t.datatype != xsd_string()) {
    out += "^^<";
    out += t.datatype;
    out.push_back('>');
  }
  return out;
}

std::string to_ntriples(const Triple& t) {
  return to_ntriples(t.s) + " " + to_ntriples(t.p) + " " + to_ntriples(t.o) + " .";
}

std::string serialize_ntriples(const std::vector<Triple>& triples) {
  std::vector<std::string> lines;
  lines.reserve(triples.size());
  for (const auto& t : triples) lines.push_back(to_ntriples(t));
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
  std::size_t total = 0;
  for (const auto& l : lines) total += l.size() + 1;
  std::string out;
  out.reserve(total);
  for (const auto& l : lines) {
    out += l;
    out.push_back('\n');
  }
  return out;
}

std::string serialize_ntriples(const TripleSet& triples) {
  return serialize_ntriples(std::vector<Triple>(triples.begin(), triples.end()));
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t line_no) : s_(line), line_(line_no) {}

  std::optional<Triple> triple() {
    ws();
    if (at_end() || peek() == '#') return std::nullopt;
    Triple t;
    t.s = resource(false);
    ws();
    t.p = resource(true);
    ws();
    t.o = object();
    ws();
    if (peek() != '.') fail("expected '.'");
    ++pos_;
    ws();
    if (!at_end() && peek() != '#') fail("unexpected content after '.'");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line_, pos_ + 1);
  }

  void ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }

  std::uint32_t hex(std::size_t n) {
    if (pos_ + n > s_.size()) fail("truncated \\u escape");
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const char c = s_[pos_++];
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<std::uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint32_t>(c - 'A' + 10);
      else fail("bad hex digit in escape");
    }
    if (v > 0x10FFFF || (v >= 0xD800 && v <= 0xDFFF)) fail("escape is not a Unicode scalar value");
    return v;
  }

  std::string iri() {
    if (peek() != '<') fail("expected '<'");
    ++pos_;
    std::string out;
    while (true) {
      if (at_end()) fail("unterminated IRI");
      const char c = s_[pos_];
      if (c == '>') {
        ++pos_;
        break;
      }
      if (c == '\\') {
        ++pos_;
        const char e = peek();
        ++pos_;
        if (e == 'u') append_utf8(out, hex(4));
        else if (e == 'U') append_utf8(out, hex(8));
        else fail("invalid escape in IRI");
        continue;
      }
      if (forbidden_in_iri(static_cast<unsigned char>(c))) fail("character not allowed in IRI");
      out.push_back(c);
      ++pos_;
    }
    if (!is_absolute_iri(out)) fail("relative IRI <" + out + ">");
    return out;
  }

  Term resource(bool predicate) {
    if (peek() == '_') fail("blank nodes are not supported");
    if (peek() != '<') fail(predicate ? "expected predicate IRI" : "expected subject IRI");
    return Term::iri(iri());
  }

  Term object() {
    const char c = peek();
    if (c == '<') return Term::iri(iri());
    if (c == '_') fail("blank nodes are not supported");
    if (c != '"') fail("expected IRI or literal");
    ++pos_;
    std::string lex;
    while (true) {
      if (at_end()) fail("unterminated literal");
      const char ch = s_[pos_];
      if (ch == '"') {
        ++pos_;
        break;
      }
      if (ch == '\\') {
        ++pos_;
        const char e = peek();
        ++pos_;
        switch (e) {
          case 't': lex.push_back('\t'); break;
          case 'b': lex.push_back('\b'); break;
          case 'n': lex.push_back('\n'); break;
          case 'r': lex.push_back('\r'); break;
          case 'f': lex.push_back('\f'); break;
          case '"': lex.push_back('"'); break;
          case '\'': lex.push_back('\''); break;
          case '\\': lex.push_back('\\'); break;
          case 'u': append_utf8(lex, hex(4)); break;
          case 'U': append_utf8(lex, hex(8)); break;
          default: --pos_; fail("invalid escape in literal");
        }
        continue;
      }
      lex.push_back(ch);
      ++pos_;
    }
    if (peek() == '@') {
      ++pos_;
      const std::size_t start = pos_;
      while (!at_end() && alpha(s_[pos_])) ++pos_;
      if (pos_ == start) fail("empty language tag");
      while (peek() == '-') {
        ++pos_;
        const std::size_t seg = pos_;
        while (!at_end() && (alpha(s_[pos_]) || digit(s_[pos_]))) ++pos_;
        if (pos_ == seg) fail("empty language subtag");
      }
      return Term::lang_literal(std::move(lex), std::string(s_.substr(start, pos_ - start)));
    }
    if (peek() == '^') {
      ++pos_;
      if (peek() != '^') fail("expected '^^'");
      ++pos_;
      return Term::literal(std::move(lex), iri());
    }
    return Term::literal(std::move(lex));
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<Triple> parse_ntriples(std::string_view text) {
  std::vector<Triple> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    if (auto t = LineParser(line, line_no).triple()) out.push_back(std::move(*t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prefixes

PrefixMap PrefixMap::defaults() {
  PrefixMap m;
  m.add("rdf", std::string(ns::rdf));
  m.add("rdfs", "http://www.w3.org/2000/01/rdf-schema#");
  m.add("xsd", std::string(ns::xsd));
  m.add("owl", std::string(ns::owl));
  m.add("schema", std::string(ns::schema));
  m.add("saref", std::string(ns::saref));
  m.add("voc", std::string(ns::voc));
  m.add("res", std::string(ns::res));
  return m;
}

std::optional<std::string> PrefixMap::expand(std::string_view curie) const {
  if (curie.size() >= 2 && curie.front() == '<' && curie.back() == '>') {
    return std::string(curie.substr(1, curie.size() - 2));
  }
  if (curie.find("://") != std::string_view::npos) return std::string(curie);
  const std::size_t colon = curie.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto it = map_.find(std::string(curie.substr(0, colon)));
  if (it == map_.end()) return std::nullopt;
  return it->second + std::string(curie.substr(colon + 1));
}

}  // namespace elkg::rdf
