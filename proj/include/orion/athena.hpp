// Athena schema language: parser and printer.
//
//   Schema <name>:<version>
//   Root entity <E> { <features> } [+ <fset>]*
//   Entity <E> { Common { <features> } Variation <n> [count <k>] { <features> } ... }
//   Relationship <R> { ... }
//   FSet <name> { <features> }
//
// Feature lines are `[?][+]name: Type`, comma separated.
#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "orion/lexer.hpp"
#include "orion/model.hpp"

namespace orion {

struct AthenaSource {
  std::string text;
  std::string origin = "<memory>";
};

struct FeatureSetDecl {
  std::string name;
  FeatureList features;
};

namespace athena {

using text::Lexer;
using text::Tok;

inline Cardinality parse_cardinality(Lexer& lx) {
  const auto& t = lx.peek();
  if (t.kind == Tok::Punct && t.text.size() == 1)
    if (auto c = Cardinality::from_symbol(t.text[0])) {
      lx.next();
      return *c;
    }
  lx.fail("cardinality symbol ('?', '&', '*' or '+')");
}

inline ScalarKind parse_scalar(Lexer& lx) {
  if (lx.peek().kind == Tok::Ident)
    if (auto s = scalar_from_name(lx.peek().text)) {
      lx.next();
      return *s;
    }
  lx.fail("scalar type");
}

inline DataType parse_data_type(Lexer& lx) {
  const auto& t = lx.peek();
  if (t.kind == Tok::Ident) {
    if (t.text == "List" || t.text == "Set") {
      bool is_list = t.text == "List";
      lx.next();
      lx.expect("<");
      DataType e = parse_data_type(lx);
      lx.expect(">");
      return is_list ? DataType::list(std::move(e)) : DataType::set(std::move(e));
    }
    if (t.text == "Map") {
      lx.next();
      lx.expect("<");
      DataType k = parse_data_type(lx);
      lx.expect(",");
      DataType v = parse_data_type(lx);
      lx.expect(">");
      return DataType::map(std::move(k), std::move(v));
    }
    if (t.text == "Tuple") {
      lx.next();
      lx.expect("<");
      std::vector<DataType> es{parse_data_type(lx)};
      while (lx.accept(",")) es.push_back(parse_data_type(lx));
      lx.expect(">");
      return DataType::tuple(std::move(es));
    }
  }
  return DataType::of(parse_scalar(lx));
}

/// Parses the type part of a feature declaration (after the colon).
inline void parse_feature_type(Lexer& lx, Feature& f) {
  const auto& t = lx.peek();
  if (t.is("Aggr")) {
    lx.next();
    lx.expect("<");
    Aggregate a;
    a.target = lx.expect_ident("aggregated entity type").text;
    lx.expect(">");
    a.cardinality = parse_cardinality(lx);
    f.body = std::move(a);
    return;
  }
  if (t.is("Ref")) {
    lx.next();
    lx.expect("<");
    Reference r;
    r.target = lx.expect_ident("referenced entity type").text;
    if (lx.accept("as")) {
      r.value_type = DataType::of(parse_scalar(lx));
    } else if (lx.accept("{")) {
      if (!lx.peek().is("}")) {
        do {
          RefAttribute a;
          a.name = lx.expect_ident("attribute name").text;
          lx.expect(":");
          a.type = parse_data_type(lx);
          r.attributes.push_back(std::move(a));
        } while (lx.accept(","));
      }
      lx.expect("}");
    }
    lx.expect(">");
    r.cardinality = parse_cardinality(lx);
    f.body = std::move(r);
    return;
  }
  Attribute a;
  a.type = parse_data_type(lx);
  if (a.type.is_scalar() && a.type.scalar == ScalarKind::String) {
    if (auto re = lx.try_regex()) a.constraint = RegexConstraint{re->text};
  } else if (a.type.is_scalar() && (a.type.scalar == ScalarKind::Integer || a.type.scalar == ScalarKind::Double) &&
             lx.peek().is("(")) {
    lx.next();
    RangeConstraint rc;
    rc.min = lx.expect_int("range lower bound");
    lx.expect("..");
    rc.max = lx.expect_int("range upper bound");
    lx.expect(")");
    a.constraint = rc;
  }
  f.body = std::move(a);
}

inline Feature parse_feature(Lexer& lx) {
  Feature f;
  bool key = false;
  while (true) {
    if (lx.accept("?")) f.optional = true;
    else if (lx.accept("+")) key = true;
    else break;
  }
  f.name = lx.expect_ident("feature name").text;
  lx.expect(":");
  parse_feature_type(lx, f);
  if (key) {
    if (!f.is_attribute()) throw DuplicateName("key modifier on non-attribute '" + f.name + "'");
    f.attribute().key = true;
  }
  return f;
}

/// Comma-separated features up to (not including) the closing brace.
inline FeatureList parse_feature_list(Lexer& lx) {
  FeatureList out;
  if (lx.peek().is("}")) return out;
  do {
    if (lx.peek().is("}")) break;  // trailing comma
    Feature f = parse_feature(lx);
    if (find_feature(out, f.name)) throw DuplicateName(f.name);
    out.push_back(std::move(f));
  } while (lx.accept(","));
  return out;
}

inline FeatureList parse_braced_features(Lexer& lx) {
  lx.expect("{");
  FeatureList fs = parse_feature_list(lx);
  lx.expect("}");
  return fs;
}

/// Type body: either a flat feature list or Common/Variation blocks.
inline void parse_type_body(Lexer& lx, SchemaType& t) {
  lx.expect("{");
  if (lx.peek().is("Common") || lx.peek().is("Variation")) {
    t.variations.clear();
    if (lx.accept("Common")) t.common = parse_braced_features(lx);
    while (lx.accept("Variation")) {
      StructuralVariation v;
      v.id = static_cast<int>(lx.expect_int("variation number"));
      if (lx.accept("count")) v.count = static_cast<std::uint64_t>(lx.expect_int("variation count"));
      if (t.variation(v.id)) throw DuplicateName(t.name + "::v" + std::to_string(v.id));
      v.features = parse_braced_features(lx);
      for (const auto& f : v.features)
        if (find_feature(t.common, f.name)) throw DuplicateName(t.name + "." + f.name);
      t.variations.push_back(std::move(v));
    }
    if (t.variations.empty()) t.variations.push_back(StructuralVariation{});
  } else {
    t.common = parse_feature_list(lx);
  }
  lx.expect("}");
}

/// Syntax-level parse: resolves feature sets and duplicates but leaves
/// reference/aggregate targets unchecked so `validate` can report them.
inline Schema parse_unchecked(const AthenaSource& src) {
  Lexer lx(src.text);
  Schema s;
  lx.expect("Schema");
  s.name = lx.expect_ident("schema name").text;
  lx.expect(":");
  s.version = static_cast<int>(lx.expect_int("schema version"));

  std::map<std::string, FeatureSetDecl> fsets;
  std::vector<std::pair<std::string, std::vector<std::string>>> inlines;
  std::set<std::string> names;

  while (!lx.at_end()) {
    const auto kw = lx.peek();
    if (kw.is("FSet")) {
      lx.next();
      FeatureSetDecl d;
      d.name = lx.expect_ident("feature set name").text;
      d.features = parse_braced_features(lx);
      if (fsets.count(d.name)) throw DuplicateName(d.name);
      fsets.emplace(d.name, std::move(d));
      continue;
    }
    SchemaType t;
    if (kw.is("Root")) {
      lx.next();
      lx.expect("entity");
      t.root = true;
    } else if (kw.is("Entity")) {
      lx.next();
    } else if (kw.is("Relationship")) {
      lx.next();
      t.kind = TypeKind::Relationship;
    } else {
      lx.fail("'Root entity', 'Entity', 'Relationship' or 'FSet'");
    }
    t.name = lx.expect_ident("type name").text;
    if (!names.insert(t.name).second) throw DuplicateName(t.name);
    parse_type_body(lx, t);
    std::vector<std::string> included;
    while (lx.accept("+")) included.push_back(lx.expect_ident("feature set name").text);
    inlines.emplace_back(t.name, std::move(included));
    s.add(std::move(t));
  }

  for (const auto& [type_name, included] : inlines) {
    SchemaType& t = s.get(type_name);
    for (const auto& fs_name : included) {
      auto it = fsets.find(fs_name);
      if (it == fsets.end()) throw UnknownFSet(fs_name);
      for (const auto& f : it->second.features) {
        if (t.has_feature(f.name)) throw DuplicateName(t.name + "." + f.name);
        t.common.push_back(f);
      }
    }
  }
  return s;
}

inline void check_targets(const Schema& s) {
  for (const SchemaType* t : s.all_types())
    for (const auto& f : t->all_features()) {
      if (f.is_reference() && !s.has_type(f.reference().target)) throw UnknownTargetType(f.reference().target);
      if (f.is_aggregate() && !s.has_type(f.aggregate().target)) throw UnknownTargetType(f.aggregate().target);
    }
}

inline std::string print_data_type(const DataType& d) { return d.to_string(); }

inline std::string escape_regex(const std::string& p) {
  std::string out;
  for (char c : p) {
    if (c == '/') out += '\\';
    out += c;
  }
  return out;
}

inline std::string print_feature(const Feature& f) {
  std::string s;
  if (f.optional) s += "? ";
  if (f.is_key()) s += "+";
  s += f.name + ": ";
  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, Attribute>) {
          s += b.type.to_string();
          if (b.constraint) {
            if (const auto* re = std::get_if<RegexConstraint>(&*b.constraint))
              s += " /" + escape_regex(re->pattern) + "/";
            else {
              const auto& r = std::get<RangeConstraint>(*b.constraint);
              s += " (" + std::to_string(r.min) + " .. " + std::to_string(r.max) + ")";
            }
          }
        } else if constexpr (std::is_same_v<B, Reference>) {
          s += "Ref<" + b.target;
          if (b.value_type) s += std::string(" as ") + scalar_name(b.value_type->scalar);
          if (!b.attributes.empty()) {
            s += " { ";
            for (std::size_t i = 0; i < b.attributes.size(); ++i)
              s += (i ? ", " : "") + b.attributes[i].name + ": " + b.attributes[i].type.to_string();
            s += " }";
          }
          s += ">";
          s += b.cardinality.symbol();
        } else {
          s += "Aggr<" + b.target + ">";
          s += b.cardinality.symbol();
        }
      },
      f.body);
  return s;
}

inline void print_features(std::ostringstream& os, const FeatureList& fs, const std::string& indent) {
  for (std::size_t i = 0; i < fs.size(); ++i)
    os << indent << print_feature(fs[i]) << (i + 1 < fs.size() ? "," : "") << "\n";
}

inline void print_type(std::ostringstream& os, const SchemaType& t) {
  if (t.kind == TypeKind::Relationship) os << "Relationship ";
  else os << (t.root ? "Root entity " : "Entity ");
  os << t.name << " {\n";
  const bool flat = t.variations.size() == 1 && t.variations[0].id == 1 && t.variations[0].features.empty() &&
                    !t.variations[0].count;
  if (flat) {
    print_features(os, t.common, "  ");
  } else {
    if (!t.common.empty()) {
      os << "  Common {\n";
      print_features(os, t.common, "    ");
      os << "  }\n";
    }
    for (const auto& v : t.variations) {
      os << "  Variation " << v.id;
      if (v.count) os << " count " << *v.count;
      if (v.features.empty()) {
        os << " {}\n";
      } else {
        os << " {\n";
        print_features(os, v.features, "    ");
        os << "  }\n";
      }
    }
  }
  os << "}\n";
}

}  // namespace athena

/// Parses Athena text into a schema satisfying every model invariant.
inline Schema parse_athena(const AthenaSource& src) {
  Schema s = athena::parse_unchecked(src);
  athena::check_targets(s);
  auto violations = validate(s);
  if (!violations.empty())
    throw InvalidSchema(src.origin + ": " + violations.front().rule + " at " + violations.front().path);
  return s;
}

inline Schema parse_athena(std::string_view text) { return parse_athena(AthenaSource{std::string(text)}); }

/// Renders a valid schema as Athena text; feature sets come out inlined.
inline std::string print_athena(const Schema& s) {
  auto violations = validate(s);
  if (!violations.empty()) throw InvalidSchema(violations.front().rule + " at " + violations.front().path);
  std::ostringstream os;
  os << "Schema " << s.name << ":" << s.version << "\n";
  for (const auto& t : s.entities) {
    os << "\n";
    athena::print_type(os, t);
  }
  for (const auto& t : s.relationships) {
    os << "\n";
    athena::print_type(os, t);
  }
  return os.str();
}

}  // namespace orion
