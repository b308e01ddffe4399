#include "elkg/triple_store.hpp"

#include <algorithm>
#include <mutex>

namespace elkg::kgstore {

using rdf::Term;
using rdf::Triple;

TripleStore::TripleStore(const TripleStore& other) {
  std::shared_lock lock(other.mutex_);
  terms_ = other.terms_;
  ids_ = other.ids_;
  spo_ = other.spo_;
  pos_ = other.pos_;
  osp_ = other.osp_;
}

TripleStore& TripleStore::operator=(const TripleStore& other) {
  if (this == &other) return *this;
  TripleStore copy(other);
  std::unique_lock lock(mutex_);
  terms_ = std::move(copy.terms_);
  ids_ = std::move(copy.ids_);
  spo_ = std::move(copy.spo_);
  pos_ = std::move(copy.pos_);
  osp_ = std::move(copy.osp_);
  return *this;
}

std::optional<TripleStore::Id> TripleStore::find_id(const Term& t) const {
  auto it = ids_.find(t);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TripleStore::Id TripleStore::intern(const Term& t) {
  auto [it, added] = ids_.try_emplace(t, static_cast<Id>(terms_.size()));
  if (added) terms_.push_back(t);
  return it->second;
}

Triple TripleStore::decode(const Key& k) const { return {terms_[k[0]], terms_[k[1]], terms_[k[2]]}; }

bool TripleStore::insert_locked(const Triple& t) {
  const Key k{intern(t.s), intern(t.p), intern(t.o)};
  if (!spo_.insert(k).second) return false;
  pos_.insert({k[1], k[2], k[0]});
  osp_.insert({k[2], k[0], k[1]});
  return true;
}

bool TripleStore::insert(const Triple& t) {
  std::unique_lock lock(mutex_);
  return insert_locked(t);
}

std::size_t TripleStore::insert(const std::vector<Triple>& ts) {
  std::unique_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& t : ts) n += insert_locked(t) ? 1 : 0;
  return n;
}

std::size_t TripleStore::insert(const rdf::TripleSet& ts) {
  std::unique_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& t : ts) n += insert_locked(t) ? 1 : 0;
  return n;
}

bool TripleStore::erase(const Triple& t) {
  std::unique_lock lock(mutex_);
  auto s = find_id(t.s), p = find_id(t.p), o = find_id(t.o);
  if (!s || !p || !o) return false;
  if (spo_.erase({*s, *p, *o}) == 0) return false;
  pos_.erase({*p, *o, *s});
  osp_.erase({*o, *s, *p});
  return true;
}

bool TripleStore::contains(const Triple& t) const {
  std::shared_lock lock(mutex_);
  auto s = find_id(t.s), p = find_id(t.p), o = find_id(t.o);
  return s && p && o && spo_.count({*s, *p, *o}) > 0;
}

std::size_t TripleStore::size() const {
  std::shared_lock lock(mutex_);
  return spo_.size();
}

std::vector<Triple> TripleStore::match_locked(Index index, const std::optional<Term>& s,
                                              const std::optional<Term>& p,
                                              const std::optional<Term>& o) const {
  std::optional<Id> ids[3];
  const std::optional<Term>* terms[3] = {&s, &p, &o};
  for (int i = 0; i < 3; ++i) {
    if (*terms[i]) {
      ids[i] = find_id(**terms[i]);
      if (!ids[i]) return {};
    }
  }
  // Positions of s/p/o inside each index key.
  static constexpr int kOrder[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
  const int idx = static_cast<int>(index);
  const std::set<Key>& set = idx == 0 ? spo_ : idx == 1 ? pos_ : osp_;

  Key lo{0, 0, 0};
  Key hi{~Id{0}, ~Id{0}, ~Id{0}};
  std::size_t prefix = 0;
  while (prefix < 3 && ids[kOrder[idx][prefix]]) {
    lo[prefix] = hi[prefix] = *ids[kOrder[idx][prefix]];
    ++prefix;
  }
  std::vector<Triple> out;
  for (auto it = set.lower_bound(lo); it != set.end() && *it <= hi; ++it) {
    Key spo;
    for (int k = 0; k < 3; ++k) spo[kOrder[idx][k]] = (*it)[k];
    bool ok = true;
    for (int k = 0; k < 3; ++k) ok = ok && (!ids[k] || *ids[k] == spo[k]);
    if (ok) out.push_back(decode(spo));
  }
  return out;
}

std::vector<Triple> TripleStore::match_via(Index index, const std::optional<Term>& s,
                                           const std::optional<Term>& p,
                                           const std::optional<Term>& o) const {
  std::shared_lock lock(mutex_);
  return match_locked(index, s, p, o);
}

std::vector<Triple> TripleStore::match(const std::optional<Term>& s, const std::optional<Term>& p,
                                       const std::optional<Term>& o) const {
  Index index = Index::spo;
  if (s) index = (o && !p) ? Index::osp : Index::spo;
  else if (p) index = Index::pos;
  else if (o) index = Index::osp;
  std::shared_lock lock(mutex_);
  return match_locked(index, s, p, o);
}

std::vector<Triple> TripleStore::triples() const {
  std::shared_lock lock(mutex_);
  std::vector<Triple> out;
  out.reserve(spo_.size());
  for (const auto& k : spo_) out.push_back(decode(k));
  std::sort(out.begin(), out.end());
  return out;
}

std::string TripleStore::to_ntriples() const { return rdf::serialize_ntriples(triples()); }

std::size_t TripleStore::load_ntriples(std::string_view text) {
  return insert(rdf::parse_ntriples(text));
}

std::size_t TripleStore::predicate_count() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  std::optional<Id> last;
  for (const auto& k : pos_) {
    if (k[0] != last) {
      ++n;
      last = k[0];
    }
  }
  return n;
}

std::size_t TripleStore::node_count() const {
  std::shared_lock lock(mutex_);
  std::set<Id> nodes;
  for (const auto& k : spo_) {
    nodes.insert(k[0]);
    nodes.insert(k[2]);
  }
  return nodes.size();
}

}  // namespace elkg::kgstore
