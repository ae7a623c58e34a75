// U-Schema logical model: schema types, structural variations and features.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "orion/errors.hpp"

namespace orion {

enum class ScalarKind { String, Integer, Double, Boolean, Timestamp, Identifier };

inline const char* scalar_name(ScalarKind k) {
  switch (k) {
    case ScalarKind::String: return "String";
    case ScalarKind::Integer: return "Integer";
    case ScalarKind::Double: return "Double";
    case ScalarKind::Boolean: return "Boolean";
    case ScalarKind::Timestamp: return "Timestamp";
    case ScalarKind::Identifier: return "Identifier";
  }
  return "?";
}

/// Maps a scalar keyword to its kind. "Number" is accepted as Integer.
inline std::optional<ScalarKind> scalar_from_name(std::string_view s) {
  if (s == "String") return ScalarKind::String;
  if (s == "Integer" || s == "Number" || s == "Int") return ScalarKind::Integer;
  if (s == "Double" || s == "Float") return ScalarKind::Double;
  if (s == "Boolean") return ScalarKind::Boolean;
  if (s == "Timestamp") return ScalarKind::Timestamp;
  if (s == "Identifier") return ScalarKind::Identifier;
  return std::nullopt;
}

/// Scalar or structured (Set/List/Map/Tuple) data type.
struct DataType {
  enum class Kind { Scalar, Set, List, Map, Tuple };

  Kind kind = Kind::Scalar;
  ScalarKind scalar = ScalarKind::String;
  std::vector<DataType> elements;  // Set/List: 1, Map: 2, Tuple: >= 1

  static DataType of(ScalarKind s) { return DataType{Kind::Scalar, s, {}}; }
  static DataType list(DataType e) { return DataType{Kind::List, ScalarKind::String, {std::move(e)}}; }
  static DataType set(DataType e) { return DataType{Kind::Set, ScalarKind::String, {std::move(e)}}; }
  static DataType map(DataType k, DataType v) {
    return DataType{Kind::Map, ScalarKind::String, {std::move(k), std::move(v)}};
  }
  static DataType tuple(std::vector<DataType> es) { return DataType{Kind::Tuple, ScalarKind::String, std::move(es)}; }

  bool is_scalar() const { return kind == Kind::Scalar; }
  bool operator==(const DataType& o) const {
    if (kind != o.kind) return false;
    if (kind == Kind::Scalar) return scalar == o.scalar;
    return elements == o.elements;
  }

  bool well_formed() const {
    switch (kind) {
      case Kind::Scalar: return elements.empty();
      case Kind::Set:
      case Kind::List: return elements.size() == 1 && elements[0].well_formed();
      case Kind::Map: return elements.size() == 2 && elements[0].well_formed() && elements[1].well_formed();
      case Kind::Tuple:
        return !elements.empty() &&
               std::all_of(elements.begin(), elements.end(), [](const DataType& d) { return d.well_formed(); });
    }
    return false;
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Scalar: return scalar_name(scalar);
      case Kind::Set: return "Set<" + elements[0].to_string() + ">";
      case Kind::List: return "List<" + elements[0].to_string() + ">";
      case Kind::Map: return "Map<" + elements[0].to_string() + ", " + elements[1].to_string() + ">";
      case Kind::Tuple: {
        std::string s = "Tuple<";
        for (std::size_t i = 0; i < elements.size(); ++i) s += (i ? ", " : "") + elements[i].to_string();
        return s + ">";
      }
    }
    return "?";
  }
};

/// Lower bound 0/1, upper bound 1 or unbounded (-1 in the taxonomy tables).
struct Cardinality {
  int lower = 1;
  bool unbounded = false;

  static constexpr Cardinality opt() { return {0, false}; }
  static constexpr Cardinality one() { return {1, false}; }
  static constexpr Cardinality any() { return {0, true}; }
  static constexpr Cardinality some() { return {1, true}; }

  bool operator==(const Cardinality&) const = default;

  char symbol() const {
    if (lower == 0) return unbounded ? '*' : '?';
    return unbounded ? '+' : '&';
  }
  static std::optional<Cardinality> from_symbol(char c) {
    switch (c) {
      case '?': return opt();
      case '&': return one();
      case '*': return any();
      case '+': return some();
      default: return std::nullopt;
    }
  }
  bool valid() const { return lower == 0 || lower == 1; }
};

struct RegexConstraint {
  std::string pattern;
  bool operator==(const RegexConstraint&) const = default;
};

struct RangeConstraint {
  std::int64_t min = 0;
  std::int64_t max = 0;
  bool operator==(const RangeConstraint&) const = default;
};

using Constraint = std::variant<RegexConstraint, RangeConstraint>;

struct Attribute {
  DataType type;
  bool key = false;
  std::optional<Constraint> constraint;
  bool operator==(const Attribute&) const = default;
};

/// Attribute carried by a graph reference (edge properties).
struct RefAttribute {
  std::string name;
  DataType type;
  bool operator==(const RefAttribute&) const = default;
};

struct Reference {
  std::string target;
  Cardinality cardinality;
  std::optional<DataType> value_type;
  std::vector<RefAttribute> attributes;

  bool operator==(const Reference& o) const {
    if (target != o.target || cardinality != o.cardinality || value_type != o.value_type) return false;
    auto a = attributes, b = o.attributes;
    auto by_name = [](const RefAttribute& x, const RefAttribute& y) { return x.name < y.name; };
    std::sort(a.begin(), a.end(), by_name);
    std::sort(b.begin(), b.end(), by_name);
    return a == b;
  }
};

struct Aggregate {
  std::string target;
  Cardinality cardinality;
  bool operator==(const Aggregate&) const = default;
};

struct Feature {
  std::string name;
  bool optional = false;
  std::variant<Attribute, Reference, Aggregate> body;

  bool operator==(const Feature&) const = default;

  bool is_attribute() const { return std::holds_alternative<Attribute>(body); }
  bool is_reference() const { return std::holds_alternative<Reference>(body); }
  bool is_aggregate() const { return std::holds_alternative<Aggregate>(body); }
  Attribute& attribute() { return std::get<Attribute>(body); }
  const Attribute& attribute() const { return std::get<Attribute>(body); }
  Reference& reference() { return std::get<Reference>(body); }
  const Reference& reference() const { return std::get<Reference>(body); }
  Aggregate& aggregate() { return std::get<Aggregate>(body); }
  const Aggregate& aggregate() const { return std::get<Aggregate>(body); }
  bool is_key() const { return is_attribute() && attribute().key; }

  static Feature attr(std::string name, DataType t, bool key = false, bool optional = false) {
    return Feature{std::move(name), optional, Attribute{std::move(t), key, std::nullopt}};
  }
  static Feature ref(std::string name, std::string target, Cardinality c,
                     std::optional<DataType> value_type = std::nullopt) {
    return Feature{std::move(name), false, Reference{std::move(target), c, std::move(value_type), {}}};
  }
  static Feature aggr(std::string name, std::string target, Cardinality c) {
    return Feature{std::move(name), false, Aggregate{std::move(target), c}};
  }
};

using FeatureList = std::vector<Feature>;

inline const Feature* find_feature(const FeatureList& fs, std::string_view name) {
  for (const auto& f : fs)
    if (f.name == name) return &f;
  return nullptr;
}
inline Feature* find_feature(FeatureList& fs, std::string_view name) {
  for (auto& f : fs)
    if (f.name == name) return &f;
  return nullptr;
}
inline bool erase_feature(FeatureList& fs, std::string_view name) {
  auto it = std::find_if(fs.begin(), fs.end(), [&](const Feature& f) { return f.name == name; });
  if (it == fs.end()) return false;
  fs.erase(it);
  return true;
}

/// Order-insensitive comparison of two feature sets keyed by name.
inline bool same_feature_set(const FeatureList& a, const FeatureList& b) {
  if (a.size() != b.size()) return false;
  for (const auto& f : a) {
    const Feature* g = find_feature(b, f.name);
    if (!g || !(*g == f)) return false;
  }
  return true;
}

struct StructuralVariation {
  int id = 1;
  FeatureList features;  // added on top of the type's common features
  std::optional<std::uint64_t> count;

  bool operator==(const StructuralVariation& o) const {
    return id == o.id && count == o.count && same_feature_set(features, o.features);
  }
};

enum class TypeKind { Entity, Relationship };

struct SchemaType {
  std::string name;
  TypeKind kind = TypeKind::Entity;
  bool root = false;
  FeatureList common;
  std::vector<StructuralVariation> variations{StructuralVariation{}};

  bool is_entity() const { return kind == TypeKind::Entity; }

  bool operator==(const SchemaType& o) const {
    return name == o.name && kind == o.kind && root == o.root && same_feature_set(common, o.common) &&
           variations == o.variations;
  }

  StructuralVariation* variation(int id) {
    for (auto& v : variations)
      if (v.id == id) return &v;
    return nullptr;
  }
  const StructuralVariation* variation(int id) const {
    for (const auto& v : variations)
      if (v.id == id) return &v;
    return nullptr;
  }

  /// Common features followed by every variation's additions, first occurrence wins.
  FeatureList all_features() const {
    FeatureList out = common;
    for (const auto& v : variations)
      for (const auto& f : v.features)
        if (!find_feature(out, f.name)) out.push_back(f);
    return out;
  }

  /// Feature names of one variation: common plus its additions, in declaration order.
  std::vector<std::string> variation_feature_names(const StructuralVariation& v) const {
    std::vector<std::string> names;
    for (const auto& f : common) names.push_back(f.name);
    for (const auto& f : v.features) names.push_back(f.name);
    return names;
  }

  bool has_feature(std::string_view name) const {
    if (find_feature(common, name)) return true;
    for (const auto& v : variations)
      if (find_feature(v.features, name)) return true;
    return false;
  }

  /// Applies fn to every stored copy of the named feature (common or per variation).
  template <typename Fn>
  int for_each_copy(std::string_view name, Fn&& fn) {
    int n = 0;
    if (Feature* f = find_feature(common, name)) {
      fn(*f);
      ++n;
    }
    for (auto& v : variations)
      if (Feature* f = find_feature(v.features, name)) {
        fn(*f);
        ++n;
      }
    return n;
  }

  const Feature* any_copy(std::string_view name) const {
    if (const Feature* f = find_feature(common, name)) return f;
    for (const auto& v : variations)
      if (const Feature* f = find_feature(v.features, name)) return f;
    return nullptr;
  }

  int next_variation_id() const {
    int m = 0;
    for (const auto& v : variations) m = std::max(m, v.id);
    return m + 1;
  }
};

struct Schema {
  std::string name;
  int version = 1;
  std::vector<SchemaType> entities;
  std::vector<SchemaType> relationships;

  SchemaType* find(std::string_view type_name) {
    for (auto& t : entities)
      if (t.name == type_name) return &t;
    for (auto& t : relationships)
      if (t.name == type_name) return &t;
    return nullptr;
  }
  const SchemaType* find(std::string_view type_name) const {
    return const_cast<Schema*>(this)->find(type_name);
  }
  const SchemaType& get(std::string_view type_name) const {
    const SchemaType* t = find(type_name);
    if (!t) throw UnknownType(std::string(type_name));
    return *t;
  }
  SchemaType& get(std::string_view type_name) {
    SchemaType* t = find(type_name);
    if (!t) throw UnknownType(std::string(type_name));
    return *t;
  }
  bool has_type(std::string_view n) const { return find(n) != nullptr; }

  std::vector<const SchemaType*> all_types() const {
    std::vector<const SchemaType*> out;
    for (const auto& t : entities) out.push_back(&t);
    for (const auto& t : relationships) out.push_back(&t);
    return out;
  }
  std::vector<SchemaType*> all_types() {
    std::vector<SchemaType*> out;
    for (auto& t : entities) out.push_back(&t);
    for (auto& t : relationships) out.push_back(&t);
    return out;
  }

  void add(SchemaType t) {
    (t.kind == TypeKind::Entity ? entities : relationships).push_back(std::move(t));
  }
  bool remove(std::string_view type_name) {
    for (auto* list : {&entities, &relationships}) {
      auto it = std::find_if(list->begin(), list->end(), [&](const SchemaType& t) { return t.name == type_name; });
      if (it != list->end()) {
        list->erase(it);
        return true;
      }
    }
    return false;
  }
};

struct Violation {
  std::string rule;
  std::string path;
  bool operator==(const Violation&) const = default;
};

namespace detail {

inline void check_feature_list(const std::string& path, const FeatureList& fs, const Schema& s,
                               std::vector<Violation>& out) {
  std::set<std::string> seen;
  for (const auto& f : fs) {
    const std::string fp = path + "." + f.name;
    if (f.name.empty()) out.push_back({"feature name non-empty", fp});
    if (!seen.insert(f.name).second) out.push_back({"feature names distinct", fp});
    if (const auto* a = std::get_if<Attribute>(&f.body)) {
      if (!a->type.well_formed()) out.push_back({"data type well-formed", fp});
      if (a->constraint) {
        if (const auto* r = std::get_if<RangeConstraint>(&*a->constraint); r && r->min > r->max)
          out.push_back({"range min <= max", fp});
      }
    } else if (const auto* r = std::get_if<Reference>(&f.body)) {
      const SchemaType* t = s.find(r->target);
      if (!t || !t->is_entity()) out.push_back({"refsTo in entities", fp});
      if (!r->cardinality.valid()) out.push_back({"legal cardinality", fp});
      if (r->value_type && !r->attributes.empty()) out.push_back({"reference valueType xor attributes", fp});
      if (r->value_type && !r->value_type->is_scalar()) out.push_back({"reference valueType scalar", fp});
    } else {
      const auto& g = std::get<Aggregate>(f.body);
      const SchemaType* t = s.find(g.target);
      if (!t || !t->is_entity()) out.push_back({"aggregates in entities", fp});
      else if (t->root) out.push_back({"aggregate target non-root", fp});
      if (!g.cardinality.valid()) out.push_back({"legal cardinality", fp});
    }
  }
}

}  // namespace detail

/// Checks every well-formedness rule of the model. Empty result means valid.
inline std::vector<Violation> validate(const Schema& s) {
  std::vector<Violation> out;
  if (s.entities.empty() && s.relationships.empty()) out.push_back({"some entities or relationships", s.name});
  if (s.version < 0) out.push_back({"version non-negative", s.name});

  std::set<std::string> names;
  for (const SchemaType* t : s.all_types())
    if (!names.insert(t->name).second) out.push_back({"type names distinct", t->name});

  if (!s.entities.empty() &&
      std::none_of(s.entities.begin(), s.entities.end(), [](const SchemaType& t) { return t.root; }))
    out.push_back({"some root entity", s.name});

  for (const SchemaType* t : s.all_types()) {
    if (t->name.empty()) out.push_back({"type name non-empty", s.name});
    if (t->kind == TypeKind::Relationship && t->root) out.push_back({"relationships never root", t->name});
    if (t->variations.empty()) out.push_back({"variations non-empty", t->name});

    detail::check_feature_list(t->name, t->common, s, out);
    std::set<int> ids;
    std::map<std::string, const Feature*> first;
    for (const auto& f : t->common) first.emplace(f.name, &f);
    for (const auto& v : t->variations) {
      const std::string vp = t->name + "::v" + std::to_string(v.id);
      if (v.id <= 0) out.push_back({"variation id positive", vp});
      if (!ids.insert(v.id).second) out.push_back({"variation ids distinct", vp});
      detail::check_feature_list(vp, v.features, s, out);
      for (const auto& f : v.features) {
        if (find_feature(t->common, f.name)) {
          out.push_back({"common and variation features disjoint", vp + "." + f.name});
          continue;
        }
        auto [it, fresh] = first.emplace(f.name, &f);
        if (!fresh && !(*it->second == f)) out.push_back({"feature names unique in type", vp + "." + f.name});
      }
    }
  }
  return out;
}

/// Union of common and all variation features of the named type.
inline FeatureList features_of(const Schema& s, std::string_view type_name) { return s.get(type_name).all_features(); }

/// Deep structural equality over every schema type outside `excluded`.
inline bool schemas_equal_except(const Schema& a, const Schema& b, const std::set<std::string>& excluded) {
  auto collect = [&](const Schema& s) {
    std::map<std::string, const SchemaType*> m;
    for (const SchemaType* t : s.all_types())
      if (!excluded.count(t->name)) m.emplace(t->name, t);
    return m;
  };
  auto ma = collect(a), mb = collect(b);
  if (ma.size() != mb.size()) return false;
  for (const auto& [name, ta] : ma) {
    auto it = mb.find(name);
    if (it == mb.end() || !(*ta == *it->second)) return false;
  }
  return true;
}

inline bool operator==(const Schema& a, const Schema& b) {
  return a.name == b.name && a.version == b.version && schemas_equal_except(a, b, {});
}

}  // namespace orion
