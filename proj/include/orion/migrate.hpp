// Data updater: executes the data-level semantics of each change operation
// against an in-memory database.
#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "orion/data.hpp"
#include "orion/evolution.hpp"
#include "orion/ndjson.hpp"

namespace orion {

struct OpReport {
  std::size_t op_index = 0;
  OpKind kind = OpKind::AddType;
  std::string summary;
  std::uint64_t touched = 0;
  std::uint64_t created = 0;
  std::uint64_t deleted = 0;
  std::uint64_t warnings = 0;
};

struct MigrationReport {
  std::vector<OpReport> ops;

  std::uint64_t warnings() const {
    std::uint64_t n = 0;
    for (const auto& o : ops) n += o.warnings;
    return n;
  }
};

struct MigrationResult {
  Database db;
  Schema schema;
  MigrationReport report;
};

namespace migration {

using evolution::expand;

struct Loc {
  const std::string& dataset;
  std::size_t ordinal;
};

inline std::string locator(const Loc& l) { return l.dataset + "#" + std::to_string(l.ordinal); }

/// Visits every instance of `type` in the database, including instances
/// embedded through aggregates. `fn(Record&, const Loc&)` returns true to drop
/// the instance (top-level records are erased, embedded ones removed or nulled).
template <typename Fn>
bool visit_record(Record& r, const SchemaType& t, const Schema& s, const std::string& type, const Loc& loc, Fn& fn,
                  int depth) {
  if (depth < 64)
    for (const auto& f : t.all_features()) {
      if (!f.is_aggregate()) continue;
      Value* v = r.get(f.name);
      const SchemaType* ct = s.find(f.aggregate().target);
      if (!v || !ct) continue;
      if (v->kind() == Value::Kind::Embedded) {
        if (visit_record(v->record(), *ct, s, type, loc, fn, depth + 1)) *v = Value::null();
      } else if (v->kind() == Value::Kind::List) {
        auto& xs = v->items();
        std::vector<Value> kept;
        for (auto& x : xs) {
          if (x.kind() == Value::Kind::Embedded && visit_record(x.record(), *ct, s, type, loc, fn, depth + 1)) continue;
          kept.push_back(std::move(x));
        }
        xs = std::move(kept);
      }
    }
  return t.name == type && fn(r, loc);
}

template <typename Fn>
void visit_instances(Database& db, const Schema& s, const std::string& type, Fn&& fn) {
  for (auto& [name, d] : db.collections) {
    const SchemaType* t = s.find(d.type_name);
    if (!t) continue;
    std::vector<Record> kept;
    kept.reserve(d.records.size());
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      Loc loc{name, i};
      bool drop;
      try {
        drop = visit_record(d.records[i], *t, s, type, loc, fn, 0);
      } catch (DataError& e) {
        e.locate(0, i, locator(loc));
        throw;
      }
      if (!drop) kept.push_back(std::move(d.records[i]));
    }
    d.records = std::move(kept);
  }
}

/// Read-only snapshot of the instances of a type, in visiting order.
inline std::vector<Record> instances_of(const Database& db, const Schema& s, const std::string& type) {
  Database copy = db;
  std::vector<Record> out;
  visit_instances(copy, s, type, [&](Record& r, const Loc&) {
    out.push_back(r);
    return false;
  });
  return out;
}

inline const Feature* key_attribute(const SchemaType& t) {
  for (const auto& f : t.all_features())
    if (f.is_key()) return t.any_copy(f.name);
  return nullptr;
}

inline Value feature_default(const Feature& f, const Schema& s, int depth = 0);

/// Record holding defaults for the common features and those of the first variation.
inline Record default_record(const SchemaType& t, const Schema& s, int depth = 0) {
  Record r;
  if (depth > 8) return r;
  for (const auto& f : t.common) r.set(f.name, feature_default(f, s, depth + 1));
  if (!t.variations.empty())
    for (const auto& f : t.variations.front().features) r.set(f.name, feature_default(f, s, depth + 1));
  return r;
}

inline Value feature_default(const Feature& f, const Schema& s, int depth) {
  if (f.is_attribute()) return default_value(f.attribute().type);
  if (f.is_reference()) return Value::null();
  const Aggregate& ag = f.aggregate();
  const SchemaType* t = s.find(ag.target);
  if (ag.cardinality.lower == 0 || !t) return Value::null();
  Value one = Value::embedded(default_record(*t, s, depth));
  return ag.cardinality.unbounded ? Value::list({one}) : one;
}

inline bool in_scope(const Record& r, const SchemaType& t, const std::vector<int>& scope) {
  if (scope.empty()) return true;
  auto v = classify_variation(r, t);
  return v && std::find(scope.begin(), scope.end(), *v) != scope.end();
}

inline void add_dataset_if_stored(Database& db, const SchemaType& t) {
  if (has_dataset(t, db.mode) && !db.find(t.name)) db.collections[t.name] = Dataset{t.name, {}};
}

inline Record project(const Record& r, const std::vector<std::string>& names, const SchemaType& t) {
  Record out;
  if (!t.is_entity())
    for (auto reserved : {kOut, kIn})
      if (const Value* v = r.get(reserved)) out.set(reserved, *v);
  for (const auto& n : names)
    if (const Value* v = r.get(n)) out.set(n, *v);
  return out;
}

/// Resolves a collection of matches according to the target cardinality.
inline Value pick(std::vector<Value> matches, bool unbounded, CastMode mode, std::uint64_t& warnings,
                  const std::string& what) {
  if (unbounded) return Value::list(std::move(matches));
  if (matches.empty()) return Value::null();
  if (matches.size() > 1) {
    if (mode == CastMode::Strict) throw JoinAmbiguity(what + " matches " + std::to_string(matches.size()) + " records", 0);
    ++warnings;
  }
  return matches.front();
}

/// Changes a stored value between single and multi-valued forms.
inline void remultiply(Value& v, bool was_unbounded, bool now_unbounded, CastMode mode, std::uint64_t& warnings) {
  if (was_unbounded == now_unbounded) return;
  if (now_unbounded) {
    v = v.is_null() ? Value::list({}) : Value::list({v});
    return;
  }
  if (v.kind() != Value::Kind::List && v.kind() != Value::Kind::Set) return;
  auto xs = v.items();
  if (xs.empty()) {
    v = Value::null();
    return;
  }
  if (xs.size() > 1) {
    if (mode == CastMode::Strict)
      throw DataError("cannot narrow " + std::to_string(xs.size()) + " values to a single value", 0);
    ++warnings;
  }
  v = xs.front();
}

/// Fresh key values for hoisted records: strings `<Type>#<n>`, integers above the current maximum.
class KeyMinter {
 public:
  KeyMinter(std::string type, const std::vector<Record>& existing, const std::string& key) : type_(std::move(type)) {
    for (const auto& r : existing)
      if (const Value* v = r.get(key)) note(*v);
  }
  void note(const Value& v) {
    if (v.kind() == Value::Kind::Int) max_int_ = std::max(max_int_, v.as_int());
    if (v.kind() == Value::Kind::Str) used_.insert(v.as_str());
  }
  Value fresh(const DataType& t) {
    if (t.is_scalar() && t.scalar == ScalarKind::Integer) return Value::integer(++max_int_);
    std::string s;
    do s = type_ + "#" + std::to_string(++n_);
    while (used_.count(s));
    used_.insert(s);
    return Value::str(s);
  }

 private:
  std::string type_;
  std::int64_t max_int_ = 0;
  std::set<std::string> used_;
  std::uint64_t n_ = 0;
};

inline void migrate_schema_type_op(Database& db, const Schema& before, const Schema& after, const ChangeOp& op,
                                   OpReport& rep) {
  auto drop = [&](const std::string& name) {
    if (Dataset* d = db.find(name)) {
      rep.deleted += d->records.size();
      db.collections.erase(name);
    }
  };
  switch (op.kind) {
    case OpKind::AddType: add_dataset_if_stored(db, after.get(op.types[0])); break;
    case OpKind::DeleteType: drop(op.types[0]); break;
    case OpKind::RenameType:
      if (auto it = db.collections.find(op.types[0]); it != db.collections.end()) {
        Dataset d = std::move(it->second);
        db.collections.erase(it);
        d.type_name = op.new_name;
        rep.touched += d.records.size();
        db.collections[op.new_name] = std::move(d);
      }
      break;
    case OpKind::ExtractType:
    case OpKind::SplitType: {
      const std::string src = op.kind == OpKind::ExtractType ? op.selector.type : op.types[0];
      std::vector<SplitPart> parts = op.parts;
      if (op.kind == OpKind::ExtractType) parts = {SplitPart{op.new_name, op.selector.features}};
      auto records = instances_of(db, before, src);
      for (const auto& p : parts) {
        const SchemaType& nt = after.get(p.name);
        if (!has_dataset(nt, db.mode)) continue;
        Dataset d{p.name, {}};
        for (const auto& r : records) d.records.push_back(project(r, p.features, nt));
        rep.created += d.records.size();
        db.collections[p.name] = std::move(d);
      }
      if (op.kind == OpKind::SplitType) drop(src);
      break;
    }
    case OpKind::MergeType: {
      const SchemaType& nt = after.get(op.new_name);
      Dataset merged{op.new_name, {}};
      for (const auto& n : op.types)
        if (Dataset* d = db.find(n))
          for (auto& r : d->records) merged.records.push_back(r);
      drop(op.types[0]);
      drop(op.types[1]);
      if (has_dataset(nt, db.mode)) {
        rep.created += merged.records.size();
        db.collections[op.new_name] = std::move(merged);
      }
      break;
    }
    default: break;
  }
}

inline void migrate_variation_op(Database& db, const Schema& before, const Schema& after, const ChangeOp& op,
                                 OpReport& rep) {
  const SchemaType& t = before.get(op.types[0]);
  switch (op.kind) {
    case OpKind::Delvar:
      visit_instances(db, before, t.name, [&](Record& r, const Loc&) {
        bool gone = classify_variation(r, t) == op.from_variation;
        if (gone) ++rep.deleted;
        return gone;
      });
      break;
    case OpKind::Adapt: {
      FeatureList wanted = t.common;
      for (const auto& f : t.variation(op.to_variation)->features) wanted.push_back(f);
      visit_instances(db, before, t.name, [&](Record& r, const Loc&) {
        if (classify_variation(r, t) != op.from_variation) return false;
        std::vector<std::string> extra;
        for (const auto& f : r.fields)
          if (!is_reserved(f.name) && !find_feature(wanted, f.name)) extra.push_back(f.name);
        for (const auto& n : extra) r.erase(n);
        for (const auto& f : wanted)
          if (!r.has(f.name)) r.set(f.name, feature_default(f, before));
        ++rep.touched;
        return false;
      });
      break;
    }
    case OpKind::Union: {
      FeatureList all = after.get(t.name).all_features();
      visit_instances(db, before, t.name, [&](Record& r, const Loc&) {
        bool changed = false;
        for (const auto& f : all)
          if (!r.has(f.name)) {
            r.set(f.name, feature_default(f, after));
            changed = true;
          }
        if (changed) ++rep.touched;
        return false;
      });
      break;
    }
    default: break;
  }
}

inline void migrate_feature_op(Database& db, const Schema& before, const Schema&, const ChangeOp& op,
                               CastMode mode, OpReport& rep) {
  const auto& scope = op.selector.variations;
  switch (op.kind) {
    case OpKind::DeleteFeature:
    case OpKind::RenameFeature:
      for (const auto& tg : expand(before, op.selector)) {
        const SchemaType& t = before.get(tg.type);
        visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
          if (!in_scope(r, t, scope)) return false;
          bool hit = op.kind == OpKind::DeleteFeature ? r.erase(tg.feature) : r.rename(tg.feature, op.new_name);
          if (hit) ++rep.touched;
          return false;
        });
      }
      break;
    case OpKind::CopyFeature:
    case OpKind::MoveFeature: {
      auto tg = expand(before, op.selector).at(0);
      const Feature& f = *before.get(tg.type).any_copy(tg.feature);
      auto sources = instances_of(db, before, tg.type);
      visit_instances(db, before, op.dest_type, [&](Record& r2, const Loc&) {
        Value v = feature_default(f, before);
        if (op.join) {
          std::vector<const Record*> hits;
          const Value* b = r2.get(op.join->target_feature);
          if (b)
            for (const auto& r1 : sources)
              if (const Value* a = r1.get(op.join->source_feature); a && *a == *b) hits.push_back(&r1);
          if (hits.size() > 1) {
            if (mode == CastMode::Strict)
              throw JoinAmbiguity("join " + op.join->source_feature + "=" + op.join->target_feature + " matches " +
                                      std::to_string(hits.size()) + " records",
                                  0);
            ++rep.warnings;
          }
          if (!hits.empty()) {
            const Value* src = hits.front()->get(tg.feature);
            v = src ? *src : Value::null();
          }
        }
        r2.set(op.new_name, std::move(v));
        ++rep.touched;
        return false;
      });
      if (op.kind == OpKind::MoveFeature)
        visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
          r.erase(tg.feature);
          return false;
        });
      break;
    }
    case OpKind::NestFeature:
    case OpKind::UnnestFeature: {
      const SchemaType& e1 = before.get(op.selector.type);
      const std::string& ag = op.new_name;
      visit_instances(db, before, e1.name, [&](Record& r, const Loc&) {
        for (const auto& name : op.selector.features) {
          if (op.kind == OpKind::NestFeature) {
            const Value* v = r.get(name);
            if (!v) continue;
            Value moved = *v;
            r.erase(name);
            Value* holder = r.get(ag);
            if (holder && holder->kind() == Value::Kind::Embedded) {
              holder->record().set(name, moved);
            } else if (holder && holder->kind() == Value::Kind::List) {
              for (auto& x : holder->items())
                if (x.kind() == Value::Kind::Embedded) x.record().set(name, moved);
            } else {
              ++rep.warnings;
            }
          } else {
            const Feature& f = *before.get(before.get(e1.name).any_copy(ag)->aggregate().target).any_copy(name);
            Value v = feature_default(f, before);
            Value* holder = r.get(ag);
            if (holder && holder->kind() == Value::Kind::Embedded) {
              if (const Value* c = holder->record().get(name)) v = *c;
              holder->record().erase(name);
            } else if (holder && holder->kind() == Value::Kind::List) {
              bool first = true;
              for (auto& x : holder->items()) {
                if (x.kind() != Value::Kind::Embedded) continue;
                if (first)
                  if (const Value* c = x.record().get(name)) v = *c;
                first = false;
                x.record().erase(name);
              }
            }
            r.set(name, std::move(v));
          }
        }
        ++rep.touched;
        return false;
      });
      break;
    }
    default: break;
  }
}

inline void migrate_attribute_op(Database& db, const Schema& before, const Schema&, const ChangeOp& op,
                                 CastMode mode, OpReport& rep) {
  const auto& scope = op.selector.variations;
  if (op.kind == OpKind::AddAttribute) {
    for (const auto& tg : expand(before, op.selector, false)) {
      const SchemaType& t = before.get(tg.type);
      visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
        if (!in_scope(r, t, scope) || r.has(tg.feature)) return false;
        r.set(tg.feature, default_value(op.data_type));
        ++rep.touched;
        return false;
      });
    }
    return;
  }
  for (const auto& tg : expand(before, op.selector)) {
    const SchemaType& t = before.get(tg.type);
    if (!t.any_copy(tg.feature)->is_attribute()) continue;
    if (op.kind == OpKind::CastAttribute) {
      visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
        if (!in_scope(r, t, scope)) return false;
        if (Value* v = r.get(tg.feature)) {
          *v = cast_value(*v, op.scalar, mode, &rep.warnings);
          ++rep.touched;
        }
        return false;
      });
    } else if (op.kind == OpKind::PromoteAttribute) {
      std::vector<Value> seen;
      visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
        const Value* v = r.get(tg.feature);
        if (!v || v->is_null() || !in_scope(r, t, scope)) return false;
        if (std::find(seen.begin(), seen.end(), *v) != seen.end())
          throw UniquenessViolation("duplicate value '" + canonical_text(*v).value_or("?") + "' for key " +
                                        tg.type + "." + tg.feature,
                                    0);
        seen.push_back(*v);
        return false;
      });
    }
  }
}

inline void migrate_reference_op(Database& db, const Schema& before, const Schema& after, const ChangeOp& op,
                                 CastMode mode, OpReport& rep) {
  const auto& scope = op.selector.variations;
  if (op.kind == OpKind::AddReference) {
    auto tg = expand(before, op.selector, false).at(0);
    const SchemaType& t = before.get(tg.type);
    const SchemaType& target = before.get(op.dest_type);
    const Feature* key = key_attribute(target);
    std::vector<Record> sources;
    if (op.join) sources = instances_of(db, before, op.dest_type);
    visit_instances(db, before, tg.type, [&](Record& r2, const Loc&) {
      if (!in_scope(r2, t, scope)) return false;
      Value v = Value::null();
      if (op.join) {
        std::vector<Value> hits;
        if (const Value* b = r2.get(op.join->target_feature))
          for (const auto& r1 : sources)
            if (const Value* a = r1.get(op.join->source_feature); a && *a == *b) {
              const Value* k = key ? r1.get(key->name) : a;
              hits.push_back(k ? *k : Value::null());
            }
        v = pick(std::move(hits), op.cardinality.unbounded, mode, rep.warnings, "reference " + tg.feature);
      }
      r2.set(tg.feature, std::move(v));
      ++rep.touched;
      return false;
    });
    return;
  }
  for (const auto& tg : expand(before, op.selector)) {
    const SchemaType& t = before.get(tg.type);
    const Feature* probe = t.any_copy(tg.feature);
    if (!probe->is_reference()) continue;
    const Reference rf = probe->reference();
    switch (op.kind) {
      case OpKind::CastReference:
        visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
          Value* v = r.get(tg.feature);
          if (!v || !in_scope(r, t, scope)) return false;
          if (v->kind() == Value::Kind::List || v->kind() == Value::Kind::Set) {
            std::vector<Value> xs;
            for (const auto& x : v->items()) xs.push_back(cast_value(x, op.scalar, mode, &rep.warnings));
            *v = v->kind() == Value::Kind::List ? Value::list(std::move(xs)) : Value::set(std::move(xs));
          } else {
            *v = cast_value(*v, op.scalar, mode, &rep.warnings);
          }
          ++rep.touched;
          return false;
        });
        break;
      case OpKind::MultReference:
        visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
          Value* v = r.get(tg.feature);
          if (!v || !in_scope(r, t, scope)) return false;
          remultiply(*v, rf.cardinality.unbounded, op.cardinality.unbounded, mode, rep.warnings);
          ++rep.touched;
          return false;
        });
        break;
      case OpKind::MorphReference: {
        const SchemaType& target = before.get(rf.target);
        const Feature* key = key_attribute(target);
        const Dataset* td = db.find(rf.target);
        std::vector<Record> pool = td ? td->records : std::vector<Record>{};
        auto deref = [&](const Value& k) -> Value {
          if (key)
            for (const auto& rec : pool)
              if (const Value* kv = rec.get(key->name); kv && *kv == k) return Value::embedded(rec);
          if (mode == CastMode::Strict)
            throw MissingKey("no " + rf.target + " record with key '" + canonical_text(k).value_or("?") + "'", 0);
          ++rep.warnings;
          return Value::null();
        };
        visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
          Value* v = r.get(tg.feature);
          if (!v) return false;
          if (v->kind() == Value::Kind::List || v->kind() == Value::Kind::Set) {
            std::vector<Value> xs;
            for (const auto& k : v->items())
              if (Value e = deref(k); !e.is_null()) xs.push_back(std::move(e));
            *v = Value::list(std::move(xs));
          } else if (!v->is_null()) {
            *v = deref(*v);
          }
          r.rename(tg.feature, op.new_name);
          ++rep.touched;
          return false;
        });
        if (!has_dataset(after.get(rf.target), db.mode))
          if (Dataset* d = db.find(rf.target)) {
            rep.deleted += d->records.size();
            db.collections.erase(rf.target);
          }
        break;
      }
      default: break;
    }
  }
}

inline void migrate_aggregate_op(Database& db, const Schema& before, const Schema& after, const ChangeOp& op,
                                 CastMode mode, OpReport& rep) {
  const auto& scope = op.selector.variations;
  if (op.kind == OpKind::AddAggregate) {
    auto tg = expand(before, op.selector, false).at(0);
    const SchemaType& t = before.get(tg.type);
    const Feature& f = *after.get(tg.type).any_copy(tg.feature);
    visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
      if (!in_scope(r, t, scope)) return false;
      r.set(tg.feature, feature_default(f, after));
      ++rep.touched;
      return false;
    });
    return;
  }
  for (const auto& tg : expand(before, op.selector)) {
    const SchemaType& t = before.get(tg.type);
    const Feature* probe = t.any_copy(tg.feature);
    if (!probe->is_aggregate()) continue;
    const Aggregate ag = probe->aggregate();
    if (op.kind == OpKind::MultAggregate) {
      visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
        Value* v = r.get(tg.feature);
        if (!v || !in_scope(r, t, scope)) return false;
        remultiply(*v, ag.cardinality.unbounded, op.cardinality.unbounded, mode, rep.warnings);
        ++rep.touched;
        return false;
      });
      continue;
    }
    // MorphAggregate: hoist embedded records into the target's dataset.
    const SchemaType& target = after.get(ag.target);
    const Feature* key = key_attribute(target);
    const bool stored = has_dataset(target, db.mode);
    if (stored) add_dataset_if_stored(db, target);
    std::vector<Record> hoisted;
    const Dataset* existing = db.find(ag.target);
    KeyMinter minter(ag.target, existing ? existing->records : std::vector<Record>{}, key ? key->name : "");
    auto hoist = [&](Record rec) -> Value {
      Value k;
      if (key) {
        const Value* kv = rec.get(key->name);
        if (kv && !kv->is_null()) {
          k = *kv;
        } else {
          k = minter.fresh(key->attribute().type);
          rec.set(key->name, k);
        }
      } else {
        if (mode == CastMode::Strict) throw MissingKey(ag.target + " has no key attribute", 0);
        ++rep.warnings;
        k = minter.fresh(DataType::of(ScalarKind::String));
      }
      minter.note(k);
      hoisted.push_back(std::move(rec));
      return k;
    };
    visit_instances(db, before, tg.type, [&](Record& r, const Loc&) {
      Value* v = r.get(tg.feature);
      if (!v) return false;
      if (v->kind() == Value::Kind::Embedded) {
        *v = hoist(v->record());
      } else if (v->kind() == Value::Kind::List) {
        std::vector<Value> keys;
        for (const auto& x : v->items())
          if (x.kind() == Value::Kind::Embedded) keys.push_back(hoist(x.record()));
        *v = Value::list(std::move(keys));
      }
      r.rename(tg.feature, op.new_name);
      ++rep.touched;
      return false;
    });
    if (stored) {
      Dataset& d = *db.find(ag.target);
      rep.created += hoisted.size();
      for (auto& h : hoisted) d.records.push_back(std::move(h));
    }
  }
}

}  // namespace migration

/// Applies one operation's data semantics. `before`/`after` are the schemas
/// on either side of the operation.
inline void migrate_op(Database& db, const Schema& before, const Schema& after, const ChangeOp& op, CastMode mode,
                       OpReport& rep) {
  using namespace migration;
  if (is_schema_type_op(op.kind)) migrate_schema_type_op(db, before, after, op, rep);
  else if (is_variation_op(op.kind)) migrate_variation_op(db, before, after, op, rep);
  else if (op.kind <= OpKind::UnnestFeature) migrate_feature_op(db, before, after, op, mode, rep);
  else if (op.kind <= OpKind::DemoteAttribute) migrate_attribute_op(db, before, after, op, mode, rep);
  else if (op.kind <= OpKind::MorphReference) migrate_reference_op(db, before, after, op, mode, rep);
  else migrate_aggregate_op(db, before, after, op, mode, rep);
}

/// Checks the script against the schema first, then runs each operation's
/// data semantics in order. Data errors carry the failing op index and record.
inline MigrationResult migrate(const Database& db, const Schema& schema, const ChangeScript& script, CastMode mode) {
  for (const auto& [name, d] : db.collections)
    if (!schema.has_type(d.type_name)) throw Error("dataset '" + name + "' names no schema type");
  auto checked = apply_script(schema, script);
  if (!checked.ok())
    throw PreconditionViolation(checked.failed_at->clause,
                                "op " + std::to_string(checked.failed_at->op_index) + ": " + checked.failed_at->message);
  MigrationResult out{db, schema, {}};
  for (std::size_t i = 0; i < script.ops.size(); ++i) {
    const ChangeOp& op = script.ops[i];
    Schema next = apply_op(out.schema, op);
    OpReport rep;
    rep.op_index = i;
    rep.kind = op.kind;
    rep.summary = print_op(op);
    try {
      migrate_op(out.db, out.schema, next, op, mode, rep);
    } catch (DataError& e) {
      e.locate(i, e.record(), e.locator());
      throw;
    }
    out.report.ops.push_back(std::move(rep));
    out.schema = std::move(next);
  }
  out.schema.version = checked.schema.version;
  return out;
}

}  // namespace orion
