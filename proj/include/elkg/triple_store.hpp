#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string_view>
#include <vector>

#include "elkg/rdf.hpp"

namespace elkg::kgstore {

/// In-memory triple set with SPO, POS and OSP indexes over dictionary ids.
/// Many concurrent readers, one writer.
class TripleStore {
 public:
  enum class Index { spo, pos, osp };

  TripleStore() = default;
  TripleStore(const TripleStore& other);
  TripleStore& operator=(const TripleStore& other);

  /// Returns true when the triple was new.
  bool insert(const rdf::Triple& t);
  std::size_t insert(const std::vector<rdf::Triple>& ts);
  std::size_t insert(const rdf::TripleSet& ts);
  bool erase(const rdf::Triple& t);
  bool contains(const rdf::Triple& t) const;
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  /// Triples matching the bound positions (nullopt = wildcard), answered from
  /// the index whose key prefix covers the bound positions. Result order
  /// follows that index and is deterministic.
  std::vector<rdf::Triple> match(const std::optional<rdf::Term>& s,
                                 const std::optional<rdf::Term>& p,
                                 const std::optional<rdf::Term>& o) const;
  /// Same, forced through one index (scanning when its prefix does not fit).
  std::vector<rdf::Triple> match_via(Index index, const std::optional<rdf::Term>& s,
                                     const std::optional<rdf::Term>& p,
                                     const std::optional<rdf::Term>& o) const;

  /// All triples, sorted.
  std::vector<rdf::Triple> triples() const;

  /// Canonical sorted N-Triples.
  std::string to_ntriples() const;
  /// Adds every triple of the document; returns the number added.
  std::size_t load_ntriples(std::string_view text);

  std::size_t predicate_count() const;
  std::size_t node_count() const;  // distinct subjects and objects

 private:
  using Id = std::uint32_t;
  using Key = std::array<Id, 3>;

  std::optional<Id> find_id(const rdf::Term& t) const;
  Id intern(const rdf::Term& t);
  rdf::Triple decode(const Key& spo) const;
  std::vector<rdf::Triple> match_locked(Index index, const std::optional<rdf::Term>& s,
                                        const std::optional<rdf::Term>& p,
                                        const std::optional<rdf::Term>& o) const;
  bool insert_locked(const rdf::Triple& t);

  mutable std::shared_mutex mutex_;
  std::vector<rdf::Term> terms_;
  std::map<rdf::Term, Id> ids_;
  std::set<Key> spo_;
  std::set<Key> pos_;
  std::set<Key> osp_;
};

}  // namespace elkg::kgstore
