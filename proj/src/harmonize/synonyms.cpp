#include <algorithm>

#include "elkg/error.hpp"
#include "elkg/harmonize.hpp"
#include "elkg/text.hpp"

namespace elkg::harmonize {

using nlohmann::json;

namespace {

std::vector<std::string> tokens_of(std::string_view raw) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : raw) {
    const auto u = static_cast<unsigned char>(c);
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || u >= 0x80) {
      cur.push_back(c);
    } else if (c >= 'A' && c <= 'Z') {
      cur.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  auto numeric = [](const std::string& t) {
    return std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  while (!tokens.empty() && numeric(tokens.back())) tokens.pop_back();
  return tokens;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

bool contains_run(const std::vector<std::string>& hay,
                  const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

std::string normalize_appliance_key(std::string_view raw) {
  return join(tokens_of(raw));
}

SynonymMap SynonymMap::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("synonym map: expected a JSON object");
  SynonymMap m;
  auto strings = [&](const char* key) {
    std::vector<std::string> out;
    if (auto it = j.find(key); it != j.end()) {
      if (!it->is_array()) throw ConfigError(std::string("synonym map: '") + key + "' must be a list");
      for (const auto& v : *it) {
        if (!v.is_string()) throw ConfigError(std::string("synonym map: '") + key + "' must contain strings");
        out.push_back(v.get<std::string>());
      }
    }
    return out;
  };

  m.ml_classes_ = strings("ml_classes");
  if (m.ml_classes_.size() > 64) {
    throw ConfigError("synonym map: at most 64 ML classes fit the label mask");
  }
  std::vector<std::string> all = m.ml_classes_;
  for (auto& n : strings("other_canonical")) all.push_back(std::move(n));

  for (const auto& name : all) {
    if (name.empty() || name == "aggregate") {
      throw ConfigError("synonym map: invalid canonical name '" + name + "'");
    }
    if (!m.canonical_.insert(name).second) {
      throw ConfigError("synonym map: duplicate canonical name '" + name + "'");
    }
    const std::string key = normalize_appliance_key(name);
    auto [it, inserted] = m.lookup_.emplace(key, name);
    if (!inserted && it->second != name) {
      throw ConfigError("synonym map: canonical names '" + it->second + "' and '" +
                        name + "' normalize to the same key");
    }
  }

  if (auto it = j.find("aliases"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("synonym map: 'aliases' must be an object");
    for (const auto& [alias, target] : it->items()) {
      if (!target.is_string()) {
        throw ConfigError("synonym map: alias '" + alias + "' must map to a string");
      }
      const std::string canon = target.get<std::string>();
      if (!m.canonical_.count(canon)) {
        throw ConfigError("synonym map: alias '" + alias +
                          "' targets unknown canonical name '" + canon + "'");
      }
      const std::string key = normalize_appliance_key(alias);
      if (key.empty()) throw ConfigError("synonym map: empty alias '" + alias + "'");
      auto [pos, inserted] = m.lookup_.emplace(key, canon);
      if (!inserted && pos->second != canon) {
        throw ConfigError("synonym map: alias '" + alias + "' maps to both '" +
                          pos->second + "' and '" + canon + "'");
      }
    }
  }

  for (const auto& ex : strings("excluded")) {
    const auto tokens = tokens_of(ex);
    if (tokens.empty()) throw ConfigError("synonym map: empty exclusion '" + ex + "'");
    const std::string key = join(tokens);
    if (auto it = m.lookup_.find(key); it != m.lookup_.end()) {
      throw ConfigError("synonym map: exclusion '" + ex +
                        "' collides with canonical name '" + it->second + "'");
    }
    m.excluded_.push_back(tokens);
  }
  return m;
}

SynonymMap SynonymMap::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::optional<std::size_t> SynonymMap::class_index(std::string_view canonical) const {
  for (std::size_t i = 0; i < ml_classes_.size(); ++i) {
    if (ml_classes_[i] == canonical) return i;
  }
  return std::nullopt;
}

bool SynonymMap::is_canonical(std::string_view name) const {
  return canonical_.count(std::string(name)) > 0;
}

Canonicalized SynonymMap::canonicalize(std::string_view raw) const {
  const auto tokens = tokens_of(raw);
  const std::string key = join(tokens);
  if (auto it = lookup_.find(key); it != lookup_.end()) {
    return {NameClass::canonical, it->second};
  }
  for (const auto& ex : excluded_) {
    if (contains_run(tokens, ex)) return {NameClass::excluded, join(ex)};
  }
  return {NameClass::unknown, key};
}

}  // namespace elkg::harmonize
