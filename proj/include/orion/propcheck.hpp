// Randomized property checking of the evolution engine: random well-formed
// schemas, operations applicable by construction, and per-operation
// postcondition and frame checks written independently of the engine.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "orion/athena.hpp"
#include "orion/data.hpp"
#include "orion/evolution.hpp"

namespace orion {

struct GenConfig {
  std::uint64_t seed = 1;
  int max_types = 4;
  int max_variations = 3;
  int max_features = 6;
  StoreMode mode = StoreMode::Aggregate;
};

struct CaseFailure {
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::string op;
  std::string clause;
};

struct CheckResult {
  OpKind kind = OpKind::AddType;
  std::size_t cases = 0;
  std::size_t applied = 0;  // cases where an applicable op existed
  std::vector<CaseFailure> failures;
  bool ok() const { return failures.empty(); }
};

namespace propcheck {

using Rng = std::mt19937_64;

inline int pick(Rng& rng, int lo, int hi) {
  if (hi <= lo) return lo;
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}
inline bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

template <typename T>
const T& choose(Rng& rng, const std::vector<T>& xs) {
  return xs.at(static_cast<std::size_t>(pick(rng, 0, static_cast<int>(xs.size()) - 1)));
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::string fingerprint(const Schema& s) {
  return std::to_string(std::hash<std::string>{}(print_athena(s)) & 0xffffffffULL);
}

inline ScalarKind any_scalar(Rng& rng) {
  static const std::vector<ScalarKind> ks{ScalarKind::String, ScalarKind::Integer, ScalarKind::Double,
                                          ScalarKind::Boolean, ScalarKind::Timestamp};
  return choose(rng, ks);
}

inline Cardinality any_cardinality(Rng& rng) {
  static const std::vector<Cardinality> cs{Cardinality::opt(), Cardinality::one(), Cardinality::any(),
                                           Cardinality::some()};
  return choose(rng, cs);
}

/// Names drawn for new types and features never clash with generated ones.
inline std::string fresh_type(const Schema& s, Rng& rng) {
  for (;;) {
    std::string n = "N" + std::to_string(pick(rng, 0, 9999));
    if (!s.has_type(n)) return n;
  }
}
inline std::string fresh_feature(const SchemaType& t, Rng& rng) {
  for (;;) {
    std::string n = "g" + std::to_string(pick(rng, 0, 9999));
    if (!t.has_feature(n)) return n;
  }
}

inline std::vector<std::string> feature_names(const SchemaType& t) {
  std::vector<std::string> out;
  for (const auto& f : t.all_features()) out.push_back(f.name);
  return out;
}

/// Types whose features reference or aggregate any of `targets`, excluding feature `skip` of `skip_type`.
inline std::set<std::string> pointing_at(const Schema& s, const std::set<std::string>& targets,
                                         const std::string& skip_type = "", const std::string& skip = "") {
  std::set<std::string> out;
  for (const SchemaType* t : s.all_types())
    for (const auto& f : t->all_features()) {
      if (t->name == skip_type && f.name == skip) continue;
      const std::string* to = f.is_reference() ? &f.reference().target : f.is_aggregate() ? &f.aggregate().target : nullptr;
      if (to && targets.count(*to)) out.insert(t->name);
    }
  return out;
}

inline bool aggregated(const Schema& s, const std::string& target, const std::string& skip_type = "",
                       const std::string& skip = "") {
  for (const SchemaType* t : s.all_types())
    for (const auto& f : t->all_features())
      if (!(t->name == skip_type && f.name == skip) && f.is_aggregate() && f.aggregate().target == target) return true;
  return false;
}

inline bool referenced(const Schema& s, const std::string& target, const std::string& skip_type = "",
                       const std::string& skip = "") {
  for (const SchemaType* t : s.all_types())
    for (const auto& f : t->all_features())
      if (!(t->name == skip_type && f.name == skip) && f.is_reference() && f.reference().target == target) return true;
  return false;
}

inline bool targets_name(const Feature& f, const std::set<std::string>& names) {
  return (f.is_reference() && names.count(f.reference().target)) || (f.is_aggregate() && names.count(f.aggregate().target));
}

inline int root_count(const Schema& s) {
  int n = 0;
  for (const auto& e : s.entities) n += e.root;
  return n;
}

// ---------------------------------------------------------------------------
// Schema generation

inline Schema gen_schema(const GenConfig& cfg) {
  Rng rng(cfg.seed);
  Schema s;
  s.name = "G";
  s.version = 1;
  const int n = pick(rng, 1, std::max(1, cfg.max_types));
  struct Plan {
    std::string name;
    TypeKind kind;
    bool root;
  };
  std::vector<Plan> plan;
  for (int i = 0; i < n; ++i) {
    Plan p{"T" + std::to_string(i + 1), TypeKind::Entity, i == 0 || coin(rng, 0.5)};
    if (i > 0 && cfg.mode == StoreMode::Graph && coin(rng, 0.35)) p = {p.name, TypeKind::Relationship, false};
    plan.push_back(p);
  }
  for (int i = 0; i < n; ++i) {
    const Plan& p = plan[i];
    std::vector<std::string> roots, parts;
    for (const auto& q : plan)
      if (q.kind == TypeKind::Entity && q.root && q.name != p.name) roots.push_back(q.name);
    for (int j = i + 1; j < n; ++j)
      if (plan[j].kind == TypeKind::Entity && !plan[j].root) parts.push_back(plan[j].name);

    FeatureList pool;
    const int nf = pick(rng, 1, std::max(1, cfg.max_features));
    for (int j = 0; j < nf; ++j) {
      std::string fname = "f" + std::to_string(j + 1);
      int kind = pick(rng, 0, 9);
      if (p.kind == TypeKind::Entity && kind >= 8 && !parts.empty()) {
        pool.push_back(Feature::aggr(fname, choose(rng, parts), any_cardinality(rng)));
      } else if (kind >= 6 && !roots.empty()) {
        std::optional<DataType> vt;
        if (coin(rng, 0.3)) vt = DataType::of(any_scalar(rng));
        pool.push_back(Feature::ref(fname, choose(rng, roots), any_cardinality(rng), vt));
      } else {
        DataType dt = coin(rng, 0.15) ? DataType::list(DataType::of(any_scalar(rng))) : DataType::of(any_scalar(rng));
        bool key = p.kind == TypeKind::Entity && j == 0 && coin(rng, 0.6) && dt.is_scalar();
        pool.push_back(Feature::attr(fname, dt, key, !key && coin(rng, 0.2)));
      }
    }
    SchemaType t;
    t.name = p.name;
    t.kind = p.kind;
    t.root = p.root;
    const int ncommon = pick(rng, 0, nf);
    t.common.assign(pool.begin(), pool.begin() + ncommon);
    FeatureList rest(pool.begin() + ncommon, pool.end());
    const int nv = pick(rng, 1, std::max(1, cfg.max_variations));
    t.variations.clear();
    for (int v = 1; v <= nv; ++v) {
      StructuralVariation var;
      var.id = v;
      for (const auto& f : rest)
        if (coin(rng, 0.5)) var.features.push_back(f);
      var.count = static_cast<std::uint64_t>(pick(rng, 1, 1000));
      t.variations.push_back(std::move(var));
    }
    s.add(std::move(t));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Applicable operations

inline ChangeOp make(OpKind k) {
  ChangeOp op;
  op.kind = k;
  return op;
}

inline FeatureSelector sel(const std::string& type, std::vector<std::string> features) {
  FeatureSelector s;
  s.type = type;
  s.features = std::move(features);
  return s;
}

inline std::vector<std::string> subset(Rng& rng, const std::vector<std::string>& xs, bool non_empty) {
  std::vector<std::string> out;
  for (const auto& x : xs)
    if (coin(rng, 0.5)) out.push_back(x);
  if (non_empty && out.empty() && !xs.empty()) out.push_back(choose(rng, xs));
  return out;
}

inline bool deletable(const Schema& s, const SchemaType& t) {
  if (s.all_types().size() < 2) return false;
  if (!pointing_at(s, {t.name}).empty() && pointing_at(s, {t.name}) != std::set<std::string>{t.name}) return false;
  if (t.is_entity() && t.root && root_count(s) == 1 && s.entities.size() > 1) return false;
  return true;
}

inline bool mergeable(const Schema& s, const SchemaType& a, const SchemaType& b) {
  if (a.name == b.name || a.kind != b.kind) return false;
  for (const auto& f : b.all_features())
    if (const Feature* g = a.any_copy(f.name); g && !(*g == f)) return false;
  if ((a.root || b.root) && (aggregated(s, a.name) || aggregated(s, b.name))) return false;
  return true;
}

/// All Rename/Delete/Merge instances on `s` the generator deems applicable.
inline std::vector<ChangeOp> enumerate_type_ops(const Schema& s, OpKind k, const std::string& fresh = "N0") {
  std::vector<ChangeOp> out;
  for (const SchemaType* t : s.all_types()) {
    if (k == OpKind::RenameType) {
      ChangeOp op = make(k);
      op.flavor = t->kind;
      op.types = {t->name};
      op.new_name = fresh;
      out.push_back(op);
    } else if (k == OpKind::DeleteType && deletable(s, *t)) {
      ChangeOp op = make(k);
      op.flavor = t->kind;
      op.types = {t->name};
      out.push_back(op);
    } else if (k == OpKind::MergeType) {
      for (const SchemaType* u : s.all_types())
        if (mergeable(s, *t, *u)) {
          ChangeOp op = make(k);
          op.flavor = t->kind;
          op.types = {t->name, u->name};
          op.new_name = fresh;
          out.push_back(op);
        }
    }
  }
  return out;
}

struct Located {
  const SchemaType* type;
  const Feature* feature;
};

template <typename Pred>
std::vector<Located> features_where(const Schema& s, Pred&& pred) {
  std::vector<Located> out;
  for (const SchemaType* t : s.all_types())
    for (const auto& f : t->all_features())
      if (pred(*t, f)) out.push_back({t, t->any_copy(f.name)});
  return out;
}

/// A random operation of kind `k` whose preconditions hold on `s`, or nullopt.
inline std::optional<ChangeOp> gen_applicable_op(const Schema& s, OpKind k, Rng& rng) {
  ChangeOp op = make(k);
  std::vector<const SchemaType*> types = s.all_types();
  auto entities = [&] {
    std::vector<const SchemaType*> out;
    for (const SchemaType* t : types)
      if (t->is_entity()) out.push_back(t);
    return out;
  }();

  switch (k) {
    case OpKind::AddType: {
      op.flavor = !s.relationships.empty() && coin(rng, 0.4) ? TypeKind::Relationship : TypeKind::Entity;
      op.types = {fresh_type(s, rng)};
      const int n = pick(rng, 1, 3);
      for (int i = 0; i < n; ++i)
        op.body.push_back(Feature::attr("a" + std::to_string(i + 1), DataType::of(any_scalar(rng)),
                                        i == 0 && op.flavor == TypeKind::Entity && coin(rng, 0.5)));
      std::vector<std::string> ents;
      for (const SchemaType* e : entities) ents.push_back(e->name);
      if (!ents.empty() && coin(rng, 0.3)) op.body.push_back(Feature::ref("r", choose(rng, ents), any_cardinality(rng)));
      return op;
    }
    case OpKind::DeleteType:
    case OpKind::RenameType:
    case OpKind::MergeType: {
      auto all = enumerate_type_ops(s, k, fresh_type(s, rng));
      if (all.empty()) return std::nullopt;
      return choose(rng, all);
    }
    case OpKind::ExtractType: {
      const SchemaType* t = choose(rng, types);
      auto names = feature_names(*t);
      if (names.empty()) return std::nullopt;
      op.flavor = t->kind;
      op.selector = sel(t->name, subset(rng, names, true));
      op.new_name = fresh_type(s, rng);
      return op;
    }
    case OpKind::SplitType: {
      std::vector<const SchemaType*> ok;
      for (const SchemaType* t : types)
        if (pointing_at(s, {t->name}, "", "").empty() && !feature_names(*t).empty()) ok.push_back(t);
      if (ok.empty()) return std::nullopt;
      const SchemaType* t = choose(rng, ok);
      op.flavor = t->kind;
      op.types = {t->name};
      std::string a = fresh_type(s, rng), b;
      do b = fresh_type(s, rng);
      while (b == a);
      auto names = feature_names(*t);
      op.parts = {{a, subset(rng, names, true)}, {b, subset(rng, names, true)}};
      return op;
    }
    case OpKind::Delvar:
    case OpKind::Adapt: {
      std::vector<const SchemaType*> ok;
      for (const SchemaType* t : types)
        if (t->variations.size() > 1) ok.push_back(t);
      if (ok.empty()) return std::nullopt;
      const SchemaType* t = choose(rng, ok);
      op.flavor = t->kind;
      op.types = {t->name};
      std::vector<int> ids;
      for (const auto& v : t->variations) ids.push_back(v.id);
      op.from_variation = choose(rng, ids);
      if (k == OpKind::Adapt) {
        do op.to_variation = choose(rng, ids);
        while (op.to_variation == op.from_variation);
      }
      return op;
    }
    case OpKind::Union: {
      const SchemaType* t = choose(rng, types);
      op.flavor = t->kind;
      op.types = {t->name};
      return op;
    }
    case OpKind::DeleteFeature:
    case OpKind::RenameFeature: {
      auto c = features_where(s, [](const SchemaType&, const Feature&) { return true; });
      if (c.empty()) return std::nullopt;
      const Located& l = choose(rng, c);
      op.selector = sel(l.type->name, {l.feature->name});
      if (k == OpKind::RenameFeature) op.new_name = fresh_feature(*l.type, rng);
      return op;
    }
    case OpKind::CopyFeature:
    case OpKind::MoveFeature: {
      auto c = features_where(s, [](const SchemaType&, const Feature&) { return true; });
      if (c.empty()) return std::nullopt;
      const Located& l = choose(rng, c);
      std::vector<const SchemaType*> dests;
      for (const SchemaType* t : types)
        if (k == OpKind::CopyFeature || t->name != l.type->name) dests.push_back(t);
      if (dests.empty()) return std::nullopt;
      const SchemaType* d = choose(rng, dests);
      op.selector = sel(l.type->name, {l.feature->name});
      op.dest_type = d->name;
      op.new_name = fresh_feature(*d, rng);
      auto dn = feature_names(*d);
      if (!dn.empty() && coin(rng, 0.6))
        op.join = JoinCondition{choose(rng, feature_names(*l.type)), choose(rng, dn)};
      return op;
    }
    case OpKind::NestFeature:
    case OpKind::UnnestFeature: {
      std::vector<std::pair<Located, std::vector<std::string>>> c;
      for (const Located& l : features_where(s, [](const SchemaType& t, const Feature& f) {
             return t.is_entity() && f.is_aggregate() && f.aggregate().target != t.name;
           })) {
        const SchemaType& e1 = *l.type;
        const SchemaType& e2 = s.get(l.feature->aggregate().target);
        const SchemaType& from = k == OpKind::NestFeature ? e1 : e2;
        const SchemaType& to = k == OpKind::NestFeature ? e2 : e1;
        std::vector<std::string> movable;
        for (const auto& n : feature_names(from))
          if (n != l.feature->name && !to.has_feature(n)) movable.push_back(n);
        if (!movable.empty()) c.push_back({l, movable});
      }
      if (c.empty()) return std::nullopt;
      const auto& [l, movable] = choose(rng, c);
      op.selector = sel(l.type->name, subset(rng, movable, true));
      op.new_name = l.feature->name;
      return op;
    }
    case OpKind::AddAttribute: {
      const SchemaType* t = choose(rng, types);
      op.selector = sel(t->name, {fresh_feature(*t, rng)});
      op.data_type = coin(rng, 0.2) ? DataType::list(DataType::of(any_scalar(rng))) : DataType::of(any_scalar(rng));
      return op;
    }
    case OpKind::CastAttribute:
    case OpKind::PromoteAttribute:
    case OpKind::DemoteAttribute: {
      auto c = features_where(s, [&](const SchemaType& t, const Feature& f) {
        if (!f.is_attribute()) return false;
        if (k == OpKind::CastAttribute) return f.attribute().type.is_scalar();
        return t.is_entity() && f.attribute().key == (k == OpKind::DemoteAttribute);
      });
      if (c.empty()) return std::nullopt;
      const Located& l = choose(rng, c);
      op.selector = sel(l.type->name, {l.feature->name});
      op.scalar = any_scalar(rng);
      return op;
    }
    case OpKind::AddReference: {
      if (entities.empty()) return std::nullopt;
      const SchemaType* t = choose(rng, types);
      const SchemaType* target = choose(rng, entities);
      op.selector = sel(t->name, {fresh_feature(*t, rng)});
      op.dest_type = target->name;
      op.cardinality = any_cardinality(rng);
      if (coin(rng, 0.5)) {
        op.has_scalar = true;
        op.scalar = any_scalar(rng);
      }
      auto tn = feature_names(*target), on = feature_names(*t);
      if (!tn.empty() && !on.empty() && coin(rng, 0.5)) op.join = JoinCondition{choose(rng, tn), choose(rng, on)};
      return op;
    }
    case OpKind::CastReference:
    case OpKind::MultReference: {
      auto c = features_where(s, [](const SchemaType&, const Feature& f) {
        return f.is_reference() && f.reference().attributes.empty();
      });
      if (c.empty()) return std::nullopt;
      const Located& l = choose(rng, c);
      op.selector = sel(l.type->name, {l.feature->name});
      op.scalar = any_scalar(rng);
      op.cardinality = any_cardinality(rng);
      return op;
    }
    case OpKind::MorphReference: {
      auto c = features_where(s, [&](const SchemaType& t, const Feature& f) {
        if (!t.is_entity() || !f.is_reference() || f.reference().target == t.name) return false;
        const SchemaType& target = s.get(f.reference().target);
        if (!target.root) return true;
        return !referenced(s, target.name, t.name, f.name) && (root_count(s) > 1);
      });
      if (c.empty()) return std::nullopt;
      const Located& l = choose(rng, c);
      op.selector = sel(l.type->name, {l.feature->name});
      op.new_name = coin(rng, 0.5) ? l.feature->name : fresh_feature(*l.type, rng);
      return op;
    }
    case OpKind::AddAggregate: {
      if (entities.empty()) return std::nullopt;
      const SchemaType* t = choose(rng, entities);
      op.selector = sel(t->name, {fresh_feature(*t, rng)});
      op.cardinality = any_cardinality(rng);
      std::vector<std::string> parts;
      for (const SchemaType* e : entities)
        if (!e->root) parts.push_back(e->name);
      if (parts.empty() || coin(rng, 0.5)) {
        op.inline_body = true;
        op.dest_type = fresh_type(s, rng);
        op.body = {Feature::attr("x", DataType::of(any_scalar(rng)))};
      } else {
        op.dest_type = choose(rng, parts);
      }
      return op;
    }
    case OpKind::MultAggregate:
    case OpKind::MorphAggregate: {
      auto c = features_where(s, [](const SchemaType& t, const Feature& f) { return t.is_entity() && f.is_aggregate(); });
      if (c.empty()) return std::nullopt;
      const Located& l = choose(rng, c);
      op.selector = sel(l.type->name, {l.feature->name});
      op.cardinality = any_cardinality(rng);
      if (k == OpKind::MorphAggregate) op.new_name = coin(rng, 0.5) ? l.feature->name : fresh_feature(*l.type, rng);
      return op;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Postconditions and frame

/// Types the operation is allowed to change.
inline std::set<std::string> frame_of(const Schema& s, const ChangeOp& op) {
  std::set<std::string> out;
  const std::string& t = is_schema_type_op(op.kind) || is_variation_op(op.kind)
                             ? (op.kind == OpKind::ExtractType ? op.selector.type : op.types.at(0))
                             : op.selector.type;
  switch (op.kind) {
    case OpKind::AddType: return {t};
    case OpKind::DeleteType:
    case OpKind::Delvar:
    case OpKind::Adapt:
    case OpKind::Union: return {t};
    case OpKind::RenameType:
      out = pointing_at(s, {t});
      out.insert(t);
      out.insert(op.new_name);
      return out;
    case OpKind::ExtractType: return {op.new_name};
    case OpKind::SplitType: return {t, op.parts.at(0).name, op.parts.at(1).name};
    case OpKind::MergeType:
      out = pointing_at(s, {op.types[0], op.types[1]});
      out.insert({op.types[0], op.types[1], op.new_name});
      return out;
    case OpKind::CopyFeature:
    case OpKind::MoveFeature: return {t, op.dest_type};
    case OpKind::NestFeature:
    case OpKind::UnnestFeature: return {t, s.get(t).any_copy(op.new_name)->aggregate().target};
    case OpKind::AddAggregate: return {t, op.dest_type};
    case OpKind::MorphReference: return {t, s.get(t).any_copy(op.selector.features[0])->reference().target};
    case OpKind::MorphAggregate: return {t, s.get(t).any_copy(op.selector.features[0])->aggregate().target};
    default: return {t};
  }
}

/// Returns the first violated postcondition clause, or nullopt.
inline std::optional<std::string> postcondition(const Schema& in, const ChangeOp& op, const Schema& out) {
  auto fail = [](std::string c) { return std::optional<std::string>(std::move(c)); };
  auto feature = [&](const Schema& s, const std::string& t, const std::string& f) -> const Feature* {
    const SchemaType* ty = s.find(t);
    return ty ? ty->any_copy(f) : nullptr;
  };
  auto same_defs = [](const FeatureList& a, const FeatureList& b) {
    if (a.size() != b.size()) return false;
    for (const auto& f : a) {
      const Feature* g = find_feature(b, f.name);
      if (!g || !(*g == f)) return false;
    }
    return true;
  };
  auto targets_of = [](const Schema& s) {
    std::multiset<std::string> out;
    for (const SchemaType* t : s.all_types())
      for (const auto& f : t->all_features()) {
        if (f.is_reference()) out.insert(f.reference().target);
        if (f.is_aggregate()) out.insert(f.aggregate().target);
      }
    return out;
  };
  const std::string& f0 = op.selector.features.empty() ? std::string() : op.selector.features[0];
  switch (op.kind) {
    case OpKind::AddType: {
      const SchemaType* t = out.find(op.types[0]);
      if (!t || t->kind != op.flavor) return fail("n in T with the given kind");
      if (t->variations.size() != 1 || !same_defs(t->all_features(), op.body)) return fail("F^n = body");
      return std::nullopt;
    }
    case OpKind::DeleteType:
      if (out.has_type(op.types[0])) return fail("t not in T'");
      return std::nullopt;
    case OpKind::RenameType: {
      const SchemaType& old = in.get(op.types[0]);
      const SchemaType* t = out.find(op.new_name);
      if (!t) return fail("entityO.name = newName");
      if (out.has_type(op.types[0])) return fail("old name gone");
      if (t->kind != old.kind || t->root != old.root || t->variations.size() != old.variations.size())
        return fail("renamed type otherwise equal");
      auto before = targets_of(in), after = targets_of(out);
      if (before.count(op.types[0]) != after.count(op.new_name) || after.count(op.types[0]))
        return fail("references follow the rename");
      return std::nullopt;
    }
    case OpKind::ExtractType: {
      const SchemaType* t = out.find(op.new_name);
      if (!t) return fail("n in T'");
      FeatureList want;
      for (const auto& n : op.selector.features) want.push_back(*in.get(op.selector.type).any_copy(n));
      if (!same_defs(t->all_features(), want)) return fail("F^n = fs");
      return std::nullopt;
    }
    case OpKind::SplitType: {
      if (out.has_type(op.types[0])) return fail("t not in T'");
      for (const auto& p : op.parts) {
        const SchemaType* t = out.find(p.name);
        if (!t) return fail("parts in T'");
        std::set<std::string> got, want(p.features.begin(), p.features.end());
        for (const auto& f : t->all_features()) got.insert(f.name);
        if (got != want) return fail("F^part = fs");
      }
      return std::nullopt;
    }
    case OpKind::MergeType: {
      if (out.has_type(op.types[0]) || out.has_type(op.types[1])) return fail("sources absent");
      const SchemaType* t = out.find(op.new_name);
      if (!t) return fail("n in T'");
      std::set<std::string> want, got;
      for (const auto& n : op.types)
        for (const auto& f : in.get(n).all_features()) want.insert(f.name);
      for (const auto& f : t->all_features()) got.insert(f.name);
      if (got != want) return fail("merged features = union");
      const std::set<std::string> merged{op.types[0], op.types[1]};
      std::size_t want_refs = 0;
      for (const SchemaType* u : in.all_types())
        if (!merged.count(u->name))
          for (const auto& f : u->all_features()) want_refs += targets_name(f, merged);
      std::set<std::string> seen;
      for (const auto& n : op.types)
        for (const auto& f : in.get(n).all_features())
          if (seen.insert(f.name).second) want_refs += targets_name(f, merged);
      if (targets_of(out).count(op.new_name) != want_refs || pointing_at(out, merged).size())
        return fail("references follow the merge");
      return std::nullopt;
    }
    case OpKind::Delvar:
    case OpKind::Adapt: {
      const SchemaType& t = out.get(op.types[0]);
      if (t.variation(op.from_variation)) return fail("v1 not in V^t'");
      if (t.variations.size() + 1 != in.get(op.types[0]).variations.size()) return fail("other variations kept");
      if (op.kind == OpKind::Adapt && !(*t.variation(op.to_variation) == *in.get(op.types[0]).variation(op.to_variation)))
        return fail("v2 unchanged");
      return std::nullopt;
    }
    case OpKind::Union: {
      const SchemaType& t = out.get(op.types[0]);
      if (t.variations.size() != 1) return fail("|V^t'| = 1");
      std::set<std::string> want, got;
      for (const auto& f : in.get(op.types[0]).all_features()) want.insert(f.name);
      for (const auto& f : t.all_features()) got.insert(f.name);
      if (got != want) return fail("F^t' = F^t");
      return std::nullopt;
    }
    case OpKind::DeleteFeature:
      if (feature(out, op.selector.type, f0)) return fail("f not in F^t'");
      return std::nullopt;
    case OpKind::RenameFeature: {
      if (feature(out, op.selector.type, f0)) return fail("f not in F^t'");
      const Feature* g = feature(out, op.selector.type, op.new_name);
      Feature want = *feature(in, op.selector.type, f0);
      want.name = op.new_name;
      if (!g || !(*g == want)) return fail("n in F^t' with f's definition");
      return std::nullopt;
    }
    case OpKind::CopyFeature:
    case OpKind::MoveFeature: {
      const Feature* g = feature(out, op.dest_type, op.new_name);
      Feature want = *feature(in, op.selector.type, f0);
      want.name = op.new_name;
      if (!g || !(*g == want)) return fail("f copied into t2");
      bool kept = feature(out, op.selector.type, f0) != nullptr;
      if (kept != (op.kind == OpKind::CopyFeature)) return fail(kept ? "f removed from t1" : "t1 keeps f");
      return std::nullopt;
    }
    case OpKind::NestFeature:
    case OpKind::UnnestFeature: {
      const std::string e1 = op.selector.type;
      const std::string e2 = in.get(e1).any_copy(op.new_name)->aggregate().target;
      const std::string& from = op.kind == OpKind::NestFeature ? e1 : e2;
      const std::string& to = op.kind == OpKind::NestFeature ? e2 : e1;
      for (const auto& n : op.selector.features) {
        if (feature(out, from, n)) return fail("f left its owner");
        const Feature* g = feature(out, to, n);
        if (!g || !(*g == *feature(in, from, n))) return fail("f moved with its definition");
      }
      return std::nullopt;
    }
    case OpKind::AddAttribute: {
      const Feature* g = feature(out, op.selector.type, f0);
      if (!g || !g->is_attribute() || !(g->attribute().type == op.data_type)) return fail("at in C^t'");
      return std::nullopt;
    }
    case OpKind::CastAttribute: {
      const Feature* g = feature(out, op.selector.type, f0);
      if (!g || !(g->attribute().type == DataType::of(op.scalar))) return fail("at.type = d");
      return std::nullopt;
    }
    case OpKind::PromoteAttribute:
    case OpKind::DemoteAttribute: {
      const Feature* g = feature(out, op.selector.type, f0);
      if (!g || g->attribute().key != (op.kind == OpKind::PromoteAttribute)) return fail("at.key updated");
      return std::nullopt;
    }
    case OpKind::AddReference: {
      const Feature* g = feature(out, op.selector.type, f0);
      if (!g || !g->is_reference() || g->reference().target != op.dest_type ||
          g->reference().cardinality != op.cardinality)
        return fail("rf in C^t'");
      return std::nullopt;
    }
    case OpKind::CastReference: {
      const Feature* g = feature(out, op.selector.type, f0);
      if (!g || g->reference().value_type != DataType::of(op.scalar)) return fail("rf.type = d");
      return std::nullopt;
    }
    case OpKind::MultReference:
    case OpKind::MultAggregate: {
      const Feature* g = feature(out, op.selector.type, f0);
      Cardinality c = g->is_reference() ? g->reference().cardinality : g->aggregate().cardinality;
      if (c != op.cardinality) return fail("(l,u) set");
      return std::nullopt;
    }
    case OpKind::MorphReference: {
      const std::string target = feature(in, op.selector.type, f0)->reference().target;
      const Feature* g = feature(out, op.selector.type, op.new_name);
      if (!g || !g->is_aggregate() || g->aggregate().target != target) return fail("ag in F^t' aggregates the target");
      if (op.new_name != f0 && feature(out, op.selector.type, f0)) return fail("rf not in F^t'");
      if (out.get(target).root) return fail("target not root");
      return std::nullopt;
    }
    case OpKind::AddAggregate: {
      const Feature* g = feature(out, op.selector.type, f0);
      if (!g || !g->is_aggregate() || g->aggregate().target != op.dest_type) return fail("ag in C^e'");
      if (!out.has_type(op.dest_type) || out.get(op.dest_type).root) return fail("target non-root entity");
      return std::nullopt;
    }
    case OpKind::MorphAggregate: {
      const std::string target = feature(in, op.selector.type, f0)->aggregate().target;
      const Feature* g = feature(out, op.selector.type, op.new_name);
      if (!g || !g->is_reference() || g->reference().target != target) return fail("rf in F^e' references the target");
      if (op.new_name != f0 && feature(out, op.selector.type, f0)) return fail("ag not in F^e'");
      if (out.get(target).root == aggregated(out, target)) return fail("target root iff no aggregates remain");
      return std::nullopt;
    }
  }
  return std::nullopt;
}

/// Applies `op` with `apply` and checks postcondition, frame and validity.
/// Returns the first violated clause, or nullopt.
inline std::optional<std::string> check_case(const Schema& s, const ChangeOp& op, const OpApplier& apply) {
  Schema out;
  try {
    out = apply(s, op);
  } catch (const Error& e) {
    return "generator/engine disagreement: " + std::string(e.what());
  }
  if (auto c = postcondition(s, op, out)) return "postcondition: " + *c;
  if (!schemas_equal_except(s, out, frame_of(s, op))) return std::string("frame: types outside the footprint changed");
  if (auto v = validate(out); !v.empty()) return "validate: " + v.front().rule + " at " + v.front().path;
  return std::nullopt;
}

inline std::uint64_t case_seed(const GenConfig& cfg, OpKind k, std::size_t i) {
  return mix(mix(cfg.seed, static_cast<std::uint64_t>(k)), i);
}

/// Runs `cases` random cases of one operation kind. Each case draws a fresh
/// schema; a schema admitting no instance of the kind is redrawn a bounded
/// number of times and otherwise counted as not applied.
inline CheckResult check_operation(OpKind k, const GenConfig& cfg, int cases, const OpApplier& apply = apply_op) {
  if (cases < 1) throw PreconditionViolation("cases >= 1", std::to_string(cases));
  CheckResult r;
  r.kind = k;
  for (int i = 0; i < cases; ++i) {
    ++r.cases;
    for (int attempt = 0; attempt < 64; ++attempt) {
      GenConfig c = cfg;
      c.seed = mix(case_seed(cfg, k, static_cast<std::size_t>(i)), static_cast<std::uint64_t>(attempt));
      Schema s = gen_schema(c);
      Rng rng(c.seed ^ 0x5bd1e995ULL);
      auto op = gen_applicable_op(s, k, rng);
      if (!op) continue;
      ++r.applied;
      if (auto clause = check_case(s, *op, apply))
        r.failures.push_back({c.seed, fingerprint(s), print_op(*op), *clause});
      break;
    }
  }
  return r;
}

inline std::map<OpKind, CheckResult> run_suite(const GenConfig& cfg, int cases_per_op, const OpApplier& apply = apply_op) {
  std::map<OpKind, CheckResult> out;
  for (OpKind k : kAllOpKinds) out.emplace(k, check_operation(k, cfg, cases_per_op, apply));
  return out;
}

/// One line per kind: `kind<TAB>cases<TAB>failures`, then one line per failure.
inline std::string format_report(const std::map<OpKind, CheckResult>& results) {
  std::string out;
  for (OpKind k : kAllOpKinds) {
    auto it = results.find(k);
    if (it == results.end()) continue;
    const CheckResult& r = it->second;
    out += std::string(op_kind_name(k)) + "\t" + std::to_string(r.cases) + "\t" + std::to_string(r.failures.size()) + "\n";
    for (const auto& f : r.failures)
      out += "  seed=" + std::to_string(f.seed) + " schema=" + f.fingerprint + " op=" + f.op + " : " + f.clause + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive small-scope sweep

/// Every valid schema with at most `max_types` entity types and at most
/// `max_features` features per type, built from a fixed menu of shapes:
/// a String attribute, a key Integer attribute, a reference to each type and
/// an aggregate of each type. Each type has one variation; roots range over
/// all assignments.
inline std::vector<Schema> small_schemas(int max_types = 2, int max_features = 2) {
  std::vector<Schema> out;
  for (int n = 1; n <= max_types; ++n) {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("T" + std::to_string(i + 1));
    std::vector<std::function<Feature(const std::string&)>> menu{
        [](const std::string& nm) { return Feature::attr(nm, DataType::of(ScalarKind::String)); },
        [](const std::string& nm) { return Feature::attr(nm, DataType::of(ScalarKind::Integer), true); },
    };
    for (const auto& t : names) {
      menu.push_back([t](const std::string& nm) { return Feature::ref(nm, t, Cardinality::one()); });
      menu.push_back([t](const std::string& nm) { return Feature::aggr(nm, t, Cardinality::opt()); });
    }
    std::vector<std::vector<int>> lists{{}};
    for (int len = 1; len <= max_features; ++len) {
      std::vector<std::vector<int>> next;
      for (const auto& l : lists)
        if (static_cast<int>(l.size()) == len - 1)
          for (int m = 0; m < static_cast<int>(menu.size()); ++m) {
            if (!l.empty() && m < l.back()) continue;
            auto c = l;
            c.push_back(m);
            next.push_back(c);
          }
      lists.insert(lists.end(), next.begin(), next.end());
    }
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      for (int roots = 0; roots < (1 << n); ++roots) {
        Schema s;
        s.name = "S";
        for (int i = 0; i < n; ++i) {
          SchemaType t;
          t.name = names[i];
          t.root = (roots >> i) & 1;
          const auto& l = lists[idx[i]];
          for (std::size_t j = 0; j < l.size(); ++j) t.common.push_back(menu[l[j]]("f" + std::to_string(j + 1)));
          s.add(std::move(t));
        }
        if (validate(s).empty()) out.push_back(std::move(s));
      }
      int d = 0;
      while (d < n && ++idx[d] == lists.size()) idx[d++] = 0;
      if (d == n) break;
    }
  }
  return out;
}

struct SweepResult {
  std::size_t schemas = 0;
  std::size_t instances = 0;
  std::vector<CaseFailure> counterexamples;
};

/// Checks every Rename/Delete/Merge instance on every small schema.
inline SweepResult exhaustive_sweep(OpKind k, int max_types = 2, int max_features = 2,
                                    const OpApplier& apply = apply_op) {
  SweepResult r;
  for (const Schema& s : small_schemas(max_types, max_features)) {
    ++r.schemas;
    for (const ChangeOp& op : enumerate_type_ops(s, k)) {
      ++r.instances;
      if (auto clause = check_case(s, op, apply)) r.counterexamples.push_back({0, fingerprint(s), print_op(op), *clause});
    }
  }
  return r;
}

}  // namespace propcheck

using propcheck::check_operation;
using propcheck::gen_applicable_op;
using propcheck::gen_schema;
using propcheck::run_suite;

}  // namespace orion
