// Schema updater: applies change operations to a schema, checking each
// operation's precondition and producing the postcondition schema.
#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orion/change_script.hpp"
#include "orion/model.hpp"
#include "orion/orion.hpp"

namespace orion {

struct OpFailure {
  std::size_t op_index = 0;
  std::string clause;
  std::string message;
};

struct LogEntry {
  std::size_t op_index = 0;
  std::string summary;
};

struct ApplyOutcome {
  Schema schema;
  std::vector<LogEntry> log;
  std::optional<OpFailure> failed_at;

  bool ok() const { return !failed_at.has_value(); }
};

/// A feature addressed by an operation after selector expansion and dotted-path resolution.
struct FeatureTarget {
  std::string type;     // owner type of the final path segment
  std::string feature;  // final segment
  std::string origin;   // type named by the selector
  std::string path;     // selector path as written
};

namespace evolution {

inline void require(bool cond, const std::string& clause, const std::string& detail = {}) {
  if (!cond) throw PreconditionViolation(clause, detail);
}

inline std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : path) {
    if (c == '.') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

/// Walks aggregate segments of a dotted path. Returns nullopt when a segment is not an aggregate.
inline std::optional<std::pair<std::string, std::string>> resolve_path(const Schema& s, const std::string& type,
                                                                       const std::string& path) {
  auto segs = split_path(path);
  std::string owner = type;
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    const SchemaType* t = s.find(owner);
    if (!t) return std::nullopt;
    const Feature* f = t->any_copy(segs[i]);
    if (!f || !f->is_aggregate()) return std::nullopt;
    owner = f->aggregate().target;
  }
  return std::make_pair(owner, segs.back());
}

/// Expands a selector into concrete targets. Wildcards skip types lacking the
/// feature; a wildcard matching nothing at all is a violation. `must_exist`
/// false is used by Add operations.
inline std::vector<FeatureTarget> expand(const Schema& s, const FeatureSelector& sel, bool must_exist = true) {
  std::vector<FeatureTarget> out;
  if (sel.wildcard()) {
    require(sel.variations.empty(), "wildcard without variation list");
    for (const auto& name : sel.features)
      for (const SchemaType* t : s.all_types()) {
        auto r = resolve_path(s, t->name, name);
        if (!r) continue;
        const SchemaType* owner = s.find(r->first);
        if (owner && owner->has_feature(r->second) == must_exist) out.push_back({r->first, r->second, t->name, name});
      }
    require(!out.empty(), "wildcard matches some type", "*::" + sel.features.front());
    return out;
  }
  require(s.has_type(sel.type), "t in T", sel.type);
  for (const auto& name : sel.features) {
    auto r = resolve_path(s, sel.type, name);
    require(r.has_value(), "path segments are aggregates", sel.type + "::" + name);
    if (!sel.variations.empty()) require(r->first == sel.type, "variation scope on direct features", name);
    const SchemaType& owner = s.get(r->first);
    if (must_exist) require(owner.has_feature(r->second), "f in F^t", r->first + "." + r->second);
    out.push_back({r->first, r->second, sel.type, name});
  }
  for (int v : sel.variations)
    if (!s.get(sel.type).variation(v)) throw UnknownVariation(sel.type, v);
  return out;
}

/// Moves a common feature into every variation so it can be changed per variation.
inline void push_down(SchemaType& t, const std::string& name) {
  Feature* f = find_feature(t.common, name);
  if (!f) return;
  Feature copy = *f;
  erase_feature(t.common, name);
  for (auto& v : t.variations) v.features.push_back(copy);
}

/// Applies fn to the copies of `name` inside the variation scope (all when empty).
template <typename Fn>
int apply_scoped(SchemaType& t, const std::string& name, const std::vector<int>& scope, Fn&& fn) {
  if (scope.empty()) return t.for_each_copy(name, fn);
  push_down(t, name);
  int n = 0;
  for (int id : scope) {
    StructuralVariation* v = t.variation(id);
    if (!v) throw UnknownVariation(t.name, id);
    if (Feature* f = find_feature(v->features, name)) {
      fn(*f);
      ++n;
    }
  }
  return n;
}

inline std::vector<std::string> referrers(const Schema& s, const std::set<std::string>& targets) {
  std::vector<std::string> out;
  for (const SchemaType* t : s.all_types())
    for (const auto& f : t->all_features()) {
      if ((f.is_reference() && targets.count(f.reference().target)) ||
          (f.is_aggregate() && targets.count(f.aggregate().target))) {
        out.push_back(t->name);
        break;
      }
    }
  return out;
}

inline void retarget(Schema& s, const std::set<std::string>& from, const std::string& to) {
  for (SchemaType* t : s.all_types()) {
    auto fix = [&](FeatureList& fs) {
      for (auto& f : fs) {
        if (f.is_reference() && from.count(f.reference().target)) f.reference().target = to;
        if (f.is_aggregate() && from.count(f.aggregate().target)) f.aggregate().target = to;
      }
    };
    fix(t->common);
    for (auto& v : t->variations) fix(v.features);
  }
}

inline int count_targeting(const Schema& s, const std::string& target, bool aggregates, const std::string& skip_type,
                           const std::string& skip_feature) {
  int n = 0;
  for (const SchemaType* t : s.all_types())
    for (const auto& f : t->all_features()) {
      if (t->name == skip_type && f.name == skip_feature) continue;
      if (aggregates && f.is_aggregate() && f.aggregate().target == target) ++n;
      if (!aggregates && f.is_reference() && f.reference().target == target) ++n;
    }
  return n;
}

inline SchemaType& typed(Schema& s, const std::string& name, TypeKind flavor) {
  SchemaType* t = s.find(name);
  require(t != nullptr, "t in T", name);
  require(t->kind == flavor, flavor == TypeKind::Entity ? "t in E" : "t in R", name);
  return *t;
}

inline SchemaType single_variation_type(std::string name, TypeKind kind, bool root, FeatureList features) {
  SchemaType t;
  t.name = std::move(name);
  t.kind = kind;
  t.root = kind == TypeKind::Entity && root;
  t.common = std::move(features);
  return t;
}

inline FeatureList pick_features(const SchemaType& t, const std::vector<std::string>& names) {
  require(!names.empty(), "feature set non-empty", t.name);
  FeatureList out;
  for (const auto& n : names) {
    const Feature* f = t.any_copy(n);
    require(f != nullptr, "fs subset of F^t", t.name + "." + n);
    require(!find_feature(out, n), "feature names distinct", n);
    out.push_back(*f);
  }
  return out;
}

inline void check_constraint_fits(Attribute& a) {
  if (!a.constraint) return;
  bool regex = std::holds_alternative<RegexConstraint>(*a.constraint);
  bool numeric = a.type.scalar == ScalarKind::Integer || a.type.scalar == ScalarKind::Double;
  bool ok = a.type.is_scalar() && (regex ? a.type.scalar == ScalarKind::String : numeric);
  if (!ok) a.constraint.reset();
}

}  // namespace evolution

// ---------------------------------------------------------------------------
// Schema type operations

inline Schema apply_schema_type_op(const Schema& in, const ChangeOp& op) {
  using namespace evolution;
  Schema s = in;
  switch (op.kind) {
    case OpKind::AddType: {
      const std::string& n = op.types.at(0);
      require(!s.has_type(n), "t not in T", n);
      for (const auto& f : op.body) {
        if (f.is_reference()) require(s.has_type(f.reference().target), "target type exists", f.reference().target);
        if (f.is_aggregate()) require(s.has_type(f.aggregate().target), "target type exists", f.aggregate().target);
      }
      s.add(single_variation_type(n, op.flavor, true, op.body));
      break;
    }
    case OpKind::DeleteType: {
      const std::string& n = op.types.at(0);
      typed(s, n, op.flavor);
      s.remove(n);
      for (const auto& r : referrers(s, {n})) require(false, "t not referenced by other types", r + " -> " + n);
      break;
    }
    case OpKind::RenameType: {
      const std::string& n = op.types.at(0);
      SchemaType& t = typed(s, n, op.flavor);
      require(!s.has_type(op.new_name), "n not in T.names", op.new_name);
      t.name = op.new_name;
      retarget(s, {n}, op.new_name);
      break;
    }
    case OpKind::ExtractType: {
      const SchemaType& t = typed(s, op.selector.type, op.flavor);
      require(op.selector.variations.empty(), "extract selects type features");
      require(!s.has_type(op.new_name), "n not in T.names", op.new_name);
      FeatureList fs = pick_features(t, op.selector.features);
      s.add(single_variation_type(op.new_name, t.kind, t.root, std::move(fs)));
      break;
    }
    case OpKind::SplitType: {
      const std::string& n = op.types.at(0);
      const SchemaType t = typed(s, n, op.flavor);
      require(op.parts.size() == 2, "two feature sets");
      const auto& a = op.parts[0];
      const auto& b = op.parts[1];
      require(a.name != b.name, "n1 != n2", a.name);
      require(!s.has_type(a.name), "n1 not in T.names", a.name);
      require(!s.has_type(b.name), "n2 not in T.names", b.name);
      FeatureList fa = pick_features(t, a.features);
      FeatureList fb = pick_features(t, b.features);
      s.remove(n);
      for (const auto& r : referrers(s, {n})) require(false, "t not referenced by other types", r + " -> " + n);
      s.add(single_variation_type(a.name, t.kind, t.root, std::move(fa)));
      s.add(single_variation_type(b.name, t.kind, t.root, std::move(fb)));
      break;
    }
    case OpKind::MergeType: {
      const std::string& n1 = op.types.at(0);
      const std::string& n2 = op.types.at(1);
      require(n1 != n2, "t1 != t2", n1);
      const SchemaType t1 = typed(s, n1, op.flavor);
      const SchemaType t2 = typed(s, n2, op.flavor);
      require(!s.has_type(op.new_name), "n not in T.names", op.new_name);
      FeatureList merged = t1.all_features();
      for (const auto& f : t2.all_features()) {
        const Feature* g = find_feature(merged, f.name);
        if (!g) merged.push_back(f);
        else require(*g == f, "shared feature names agree", f.name);
      }
      const bool root = t1.root || t2.root;
      s.remove(n1);
      s.remove(n2);
      s.add(single_variation_type(op.new_name, op.flavor, root, std::move(merged)));
      retarget(s, {n1, n2}, op.new_name);
      break;
    }
    default: throw std::logic_error("not a schema type operation");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Structural variation operations

inline Schema apply_variation_op(const Schema& in, const ChangeOp& op) {
  using namespace evolution;
  Schema s = in;
  SchemaType& t = typed(s, op.types.at(0), op.flavor);
  switch (op.kind) {
    case OpKind::Delvar:
    case OpKind::Adapt: {
      if (!t.variation(op.from_variation)) throw UnknownVariation(t.name, op.from_variation);
      if (op.kind == OpKind::Adapt) {
        if (!t.variation(op.to_variation)) throw UnknownVariation(t.name, op.to_variation);
        require(op.from_variation != op.to_variation, "v1 != v2");
      }
      require(t.variations.size() > 1, "V^t keeps a variation", t.name);
      std::erase_if(t.variations, [&](const StructuralVariation& v) { return v.id == op.from_variation; });
      break;
    }
    case OpKind::Union: {
      require(!t.variations.empty(), "V^t non-empty", t.name);
      StructuralVariation m;
      m.id = t.variations.front().id;
      std::optional<std::uint64_t> count;
      for (const auto& v : t.variations) {
        for (const auto& f : v.features)
          if (!find_feature(m.features, f.name)) m.features.push_back(f);
        if (v.count) count = count.value_or(0) + *v.count;
      }
      m.count = count;
      t.variations = {std::move(m)};
      break;
    }
    default: throw std::logic_error("not a variation operation");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Feature operations

inline Schema apply_feature_op(const Schema& in, const ChangeOp& op) {
  using namespace evolution;
  Schema s = in;
  const auto& scope = op.selector.variations;
  switch (op.kind) {
    case OpKind::DeleteFeature: {
      for (const auto& tg : expand(s, op.selector)) {
        SchemaType& t = s.get(tg.type);
        if (scope.empty()) {
          erase_feature(t.common, tg.feature);
          for (auto& v : t.variations) erase_feature(v.features, tg.feature);
        } else {
          push_down(t, tg.feature);
          for (int id : scope) erase_feature(t.variation(id)->features, tg.feature);
        }
      }
      break;
    }
    case OpKind::RenameFeature: {
      for (const auto& tg : expand(s, op.selector)) {
        SchemaType& t = s.get(tg.type);
        if (scope.empty()) {
          require(!t.has_feature(op.new_name), "n not in t.features.names", t.name + "." + op.new_name);
          t.for_each_copy(tg.feature, [&](Feature& f) { f.name = op.new_name; });
        } else {
          push_down(t, tg.feature);
          for (int id : scope)
            require(!find_feature(t.variation(id)->features, op.new_name), "n not in t.features.names",
                    t.name + "." + op.new_name);
          const Feature* renamed = nullptr;
          for (int id : scope)
            if (Feature* f = find_feature(t.variation(id)->features, tg.feature)) {
              f->name = op.new_name;
              renamed = f;
            }
          if (renamed) {
            const Feature probe = *renamed;
            for (const auto& v : t.variations)
              if (const Feature* g = find_feature(v.features, op.new_name); g && !(*g == probe))
                throw AmbiguousSelector(t.name + "." + op.new_name);
          }
        }
      }
      break;
    }
    case OpKind::CopyFeature:
    case OpKind::MoveFeature: {
      require(scope.empty(), "copy selects type features");
      auto tg = expand(s, op.selector).at(0);
      require(tg.type == tg.origin, "copy of direct feature", tg.path);
      require(s.has_type(op.dest_type), "t2 in T", op.dest_type);
      require(op.kind == OpKind::CopyFeature ? (tg.type != op.dest_type || tg.feature != op.new_name)
                                             : tg.type != op.dest_type,
              "t1 != t2", op.dest_type);
      const SchemaType& src = s.get(tg.type);
      SchemaType& dst = s.get(op.dest_type);
      require(!dst.has_feature(op.new_name), "f not in F^t2", op.dest_type + "." + op.new_name);
      if (op.join) {
        require(src.has_feature(op.join->source_feature), "join feature in F^t1", op.join->source_feature);
        require(dst.has_feature(op.join->target_feature), "join feature in F^t2", op.join->target_feature);
      }
      Feature f = *src.any_copy(tg.feature);
      f.name = op.new_name;
      dst.common.push_back(std::move(f));
      if (op.kind == OpKind::MoveFeature) {
        SchemaType& t1 = s.get(tg.type);
        erase_feature(t1.common, tg.feature);
        for (auto& v : t1.variations) erase_feature(v.features, tg.feature);
      }
      break;
    }
    case OpKind::NestFeature:
    case OpKind::UnnestFeature: {
      require(scope.empty(), "nest selects type features");
      require(!op.selector.wildcard(), "nest names an entity type");
      SchemaType& e1 = s.get(op.selector.type);
      require(e1.is_entity(), "e1 in E", e1.name);
      const Feature* ag = e1.any_copy(op.new_name);
      require(ag && ag->is_aggregate(), "ag in F^e1 is an aggregate", e1.name + "." + op.new_name);
      const std::string e2_name = ag->aggregate().target;
      require(e2_name != e1.name, "e1 != e2");
      for (const auto& name : op.selector.features) {
        require(name.find('.') == std::string::npos, "nested feature is direct", name);
        SchemaType& a = s.get(op.selector.type);
        SchemaType& b = s.get(e2_name);
        SchemaType& from = op.kind == OpKind::NestFeature ? a : b;
        SchemaType& to = op.kind == OpKind::NestFeature ? b : a;
        require(name != op.new_name, "f != ag", name);
        require(from.has_feature(name), op.kind == OpKind::NestFeature ? "f in F^e1" : "f in F^e2", name);
        require(!to.has_feature(name), op.kind == OpKind::NestFeature ? "f not in F^e2" : "f not in F^e1", name);
        Feature f = *from.any_copy(name);
        erase_feature(from.common, name);
        for (auto& v : from.variations) erase_feature(v.features, name);
        to.common.push_back(std::move(f));
      }
      break;
    }
    default: throw std::logic_error("not a feature operation");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Attribute operations

inline Schema apply_attribute_op(const Schema& in, const ChangeOp& op) {
  using namespace evolution;
  Schema s = in;
  const auto& scope = op.selector.variations;
  if (op.kind == OpKind::AddAttribute) {
    require(op.data_type.well_formed(), "attribute type well-formed");
    std::vector<FeatureTarget> targets;
    if (op.selector.wildcard()) {
      targets = expand(s, op.selector, false);
    } else {
      targets = expand(s, op.selector, false);
      for (const auto& tg : targets)
        require(!s.get(tg.type).has_feature(tg.feature), "at not in C^t", tg.type + "." + tg.feature);
    }
    for (const auto& tg : targets) {
      SchemaType& t = s.get(tg.type);
      Feature f = Feature::attr(tg.feature, op.data_type);
      if (scope.empty()) {
        t.common.push_back(std::move(f));
      } else {
        for (int id : scope) t.variation(id)->features.push_back(f);
      }
    }
    return s;
  }
  for (const auto& tg : expand(s, op.selector)) {
    SchemaType& t = s.get(tg.type);
    const Feature* probe = t.any_copy(tg.feature);
    if (op.selector.wildcard() && !probe->is_attribute()) continue;
    require(probe->is_attribute(), "at is an attribute", tg.type + "." + tg.feature);
    switch (op.kind) {
      case OpKind::CastAttribute:
        if (!probe->attribute().type.is_scalar()) throw NonScalarCastTarget();
        apply_scoped(t, tg.feature, scope, [&](Feature& f) {
          f.attribute().type = DataType::of(op.scalar);
          check_constraint_fits(f.attribute());
        });
        break;
      case OpKind::PromoteAttribute:
      case OpKind::DemoteAttribute: {
        const bool promote = op.kind == OpKind::PromoteAttribute;
        require(t.is_entity(), "e in E", t.name);
        require(probe->attribute().key != promote, promote ? "at.key = False" : "at.key = True",
                tg.type + "." + tg.feature);
        apply_scoped(t, tg.feature, scope, [&](Feature& f) { f.attribute().key = promote; });
        break;
      }
      default: throw std::logic_error("not an attribute operation");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Reference operations

inline Schema apply_reference_op(const Schema& in, const ChangeOp& op) {
  using namespace evolution;
  Schema s = in;
  const auto& scope = op.selector.variations;
  if (op.kind == OpKind::AddReference) {
    auto tg = expand(s, op.selector, false).at(0);
    SchemaType& t = s.get(tg.type);
    require(!t.has_feature(tg.feature), "rf not in C^t", tg.type + "." + tg.feature);
    const SchemaType* target = s.find(op.dest_type);
    if (!target) throw UnknownTargetType(op.dest_type);
    require(target->is_entity(), "reference target in E", op.dest_type);
    if (op.join) {
      require(target->has_feature(op.join->source_feature), "join feature in F^target", op.join->source_feature);
      require(t.has_feature(op.join->target_feature), "join feature in F^t", op.join->target_feature);
    }
    Feature f = Feature::ref(tg.feature, op.dest_type, op.cardinality,
                             op.has_scalar ? std::optional<DataType>(DataType::of(op.scalar)) : std::nullopt);
    f.reference().attributes = op.ref_attributes;
    if (scope.empty()) t.common.push_back(std::move(f));
    else
      for (int id : scope) t.variation(id)->features.push_back(f);
    return s;
  }
  for (const auto& tg : expand(s, op.selector)) {
    SchemaType& t = s.get(tg.type);
    const Feature* probe = t.any_copy(tg.feature);
    if (op.selector.wildcard() && !probe->is_reference()) continue;
    require(probe->is_reference(), "rf is a reference", tg.type + "." + tg.feature);
    switch (op.kind) {
      case OpKind::CastReference:
        require(probe->reference().attributes.empty(), "reference without attributes", tg.feature);
        apply_scoped(t, tg.feature, scope, [&](Feature& f) { f.reference().value_type = DataType::of(op.scalar); });
        break;
      case OpKind::MultReference:
        require(op.cardinality.valid(), "(l,u) legal");
        apply_scoped(t, tg.feature, scope, [&](Feature& f) { f.reference().cardinality = op.cardinality; });
        break;
      case OpKind::MorphReference: {
        require(scope.empty(), "morph selects type features");
        require(t.is_entity(), "aggregates live in entity types", t.name);
        const Reference rf = probe->reference();
        require(op.new_name == tg.feature || !t.has_feature(op.new_name), "ag not in F^t", op.new_name);
        SchemaType& target = s.get(rf.target);
        require(target.name != t.name, "aggregate target differs from owner", t.name);
        if (target.root) {
          require(count_targeting(s, rf.target, false, tg.type, tg.feature) == 0,
                  "morphed target referenced only here", rf.target);
          target.root = false;
        }
        s.get(tg.type).for_each_copy(tg.feature, [&](Feature& f) {
          f.name = op.new_name;
          f.body = Aggregate{rf.target, rf.cardinality};
        });
        break;
      }
      default: throw std::logic_error("not a reference operation");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Aggregate operations

inline Schema apply_aggregate_op(const Schema& in, const ChangeOp& op) {
  using namespace evolution;
  Schema s = in;
  const auto& scope = op.selector.variations;
  if (op.kind == OpKind::AddAggregate) {
    auto tg = expand(s, op.selector, false).at(0);
    require(s.get(tg.type).is_entity(), "e in E", tg.type);
    require(!s.get(tg.type).has_feature(tg.feature), "ag not in C^e", tg.type + "." + tg.feature);
    if (op.inline_body) {
      require(!s.has_type(op.dest_type), "new aggregate type not in T.names", op.dest_type);
      s.add(single_variation_type(op.dest_type, TypeKind::Entity, false, op.body));
    } else {
      const SchemaType* target = s.find(op.dest_type);
      if (!target) throw UnknownTargetType(op.dest_type);
      require(target->is_entity() && !target->root, "aggregate target is non-root entity", op.dest_type);
    }
    SchemaType& t = s.get(tg.type);
    Feature f = Feature::aggr(tg.feature, op.dest_type, op.cardinality);
    if (scope.empty()) t.common.push_back(std::move(f));
    else
      for (int id : scope) t.variation(id)->features.push_back(f);
    return s;
  }
  for (const auto& tg : expand(s, op.selector)) {
    SchemaType& t = s.get(tg.type);
    const Feature* probe = t.any_copy(tg.feature);
    if (op.selector.wildcard() && !probe->is_aggregate()) continue;
    require(t.is_entity(), "e in E", t.name);
    require(probe->is_aggregate(), "ag is an aggregate", tg.type + "." + tg.feature);
    switch (op.kind) {
      case OpKind::MultAggregate:
        require(op.cardinality.valid(), "(l,u) legal");
        apply_scoped(t, tg.feature, scope, [&](Feature& f) { f.aggregate().cardinality = op.cardinality; });
        break;
      case OpKind::MorphAggregate: {
        require(scope.empty(), "morph selects type features");
        const Aggregate ag = probe->aggregate();
        require(op.new_name == tg.feature || !t.has_feature(op.new_name), "rf not in F^e", op.new_name);
        t.for_each_copy(tg.feature, [&](Feature& f) {
          f.name = op.new_name;
          f.body = Reference{ag.target, ag.cardinality, std::nullopt, {}};
        });
        if (count_targeting(s, ag.target, true, "", "") == 0) s.get(ag.target).root = true;
        break;
      }
      default: throw std::logic_error("not an aggregate operation");
    }
  }
  return s;
}

/// Applies one operation. Throws PreconditionViolation (or a subclass) when
/// the precondition does not hold or the result would break a model invariant.
inline Schema apply_op(const Schema& in, const ChangeOp& op) {
  Schema out;
  switch (op.kind) {
    case OpKind::AddType:
    case OpKind::DeleteType:
    case OpKind::RenameType:
    case OpKind::ExtractType:
    case OpKind::SplitType:
    case OpKind::MergeType: out = apply_schema_type_op(in, op); break;
    case OpKind::Delvar:
    case OpKind::Adapt:
    case OpKind::Union: out = apply_variation_op(in, op); break;
    case OpKind::DeleteFeature:
    case OpKind::RenameFeature:
    case OpKind::CopyFeature:
    case OpKind::MoveFeature:
    case OpKind::NestFeature:
    case OpKind::UnnestFeature: out = apply_feature_op(in, op); break;
    case OpKind::AddAttribute:
    case OpKind::CastAttribute:
    case OpKind::PromoteAttribute:
    case OpKind::DemoteAttribute: out = apply_attribute_op(in, op); break;
    case OpKind::AddReference:
    case OpKind::CastReference:
    case OpKind::MultReference:
    case OpKind::MorphReference: out = apply_reference_op(in, op); break;
    case OpKind::AddAggregate:
    case OpKind::MultAggregate:
    case OpKind::MorphAggregate: out = apply_aggregate_op(in, op); break;
  }
  auto violations = validate(out);
  if (!violations.empty())
    throw PreconditionViolation("result satisfies model invariants",
                                violations.front().rule + " at " + violations.front().path);
  return out;
}

/// Types an operation may change (the frame condition's exclusion set),
/// computed from the input schema without applying the operation.
inline std::set<std::string> footprint(const Schema& s, const ChangeOp& op) {
  using namespace evolution;
  std::set<std::string> out;
  auto add_refs = [&](const std::set<std::string>& targets) {
    for (const auto& r : referrers(s, targets)) out.insert(r);
  };
  auto add_selected = [&](bool must_exist) {
    try {
      for (const auto& tg : expand(s, op.selector, must_exist)) out.insert(tg.type);
    } catch (const PreconditionViolation&) {
    }
  };
  switch (op.kind) {
    case OpKind::AddType: out.insert(op.types[0]); break;
    case OpKind::DeleteType:
    case OpKind::Delvar:
    case OpKind::Adapt:
    case OpKind::Union: out.insert(op.types[0]); break;
    case OpKind::RenameType:
      out = {op.types[0], op.new_name};
      add_refs({op.types[0]});
      break;
    case OpKind::ExtractType: out.insert(op.new_name); break;
    case OpKind::SplitType:
      out.insert(op.types[0]);
      for (const auto& p : op.parts) out.insert(p.name);
      break;
    case OpKind::MergeType:
      out = {op.types[0], op.types[1], op.new_name};
      add_refs({op.types[0], op.types[1]});
      break;
    case OpKind::CopyFeature:
    case OpKind::MoveFeature:
      out.insert(op.dest_type);
      add_selected(true);
      break;
    case OpKind::NestFeature:
    case OpKind::UnnestFeature:
      out.insert(op.selector.type);
      if (const SchemaType* t = s.find(op.selector.type))
        if (const Feature* ag = t->any_copy(op.new_name); ag && ag->is_aggregate()) out.insert(ag->aggregate().target);
      break;
    case OpKind::AddAggregate:
      out.insert(op.dest_type);
      add_selected(false);
      break;
    case OpKind::AddAttribute:
    case OpKind::AddReference: add_selected(false); break;
    case OpKind::MorphReference:
    case OpKind::MorphAggregate:
      add_selected(true);
      if (const SchemaType* t = s.find(op.selector.type))
        if (const Feature* f = t->any_copy(op.selector.features.at(0))) {
          if (f->is_reference()) out.insert(f->reference().target);
          if (f->is_aggregate()) out.insert(f->aggregate().target);
        }
      break;
    default: add_selected(true); break;
  }
  return out;
}

using OpApplier = std::function<Schema(const Schema&, const ChangeOp&)>;

/// Applies a script sequentially. The first failing operation halts
/// application; the outcome then holds the schema after the last success.
inline ApplyOutcome apply_script(const Schema& schema, const ChangeScript& script, const OpApplier& apply = apply_op) {
  if (script.using_schema != schema.name || script.using_version != schema.version)
    throw UsingMismatch("script uses " + script.using_schema + ":" + std::to_string(script.using_version) +
                        " but schema is " + schema.name + ":" + std::to_string(schema.version));
  ApplyOutcome out{schema, {}, std::nullopt};
  for (std::size_t i = 0; i < script.ops.size(); ++i) {
    try {
      out.schema = apply(out.schema, script.ops[i]);
    } catch (const PreconditionViolation& e) {
      out.failed_at = OpFailure{i, e.clause(), e.what()};
      return out;
    } catch (const UnknownTargetType& e) {
      out.failed_at = OpFailure{i, "target type exists", e.what()};
      return out;
    } catch (const UnknownType& e) {
      out.failed_at = OpFailure{i, "t in T", e.what()};
      return out;
    }
    out.log.push_back({i, print_op(script.ops[i])});
  }
  out.schema.version = schema.version + 1;
  return out;
}

}  // namespace orion
