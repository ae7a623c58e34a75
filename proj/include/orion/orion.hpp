// Orion change language: parser and printer.
#pragma once

#include <cctype>
#include <sstream>
#include <string>
#include <string_view>

#include "orion/athena.hpp"
#include "orion/change_script.hpp"
#include "orion/lexer.hpp"

namespace orion {

namespace orion_syntax {

using text::Lexer;
using text::Tok;

inline std::optional<int> variation_number(const text::Token& t) {
  if (t.kind == Tok::Int) return std::stoi(t.text);
  if (t.kind == Tok::Ident && t.text.size() > 1 && t.text[0] == 'v' &&
      std::all_of(t.text.begin() + 1, t.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return std::stoi(t.text.substr(1));
  return std::nullopt;
}

inline int parse_variation_id(Lexer& lx) {
  auto v = variation_number(lx.peek());
  if (!v || *v <= 0) lx.fail("variation id (vN)");
  lx.next();
  return *v;
}

inline std::string parse_qname(Lexer& lx) {
  std::string s = lx.expect_ident("feature name").text;
  while (lx.accept(".")) s += "." + lx.expect_ident("feature name").text;
  return s;
}

inline TypeKind parse_flavor(Lexer& lx) {
  const auto& t = lx.peek();
  if (t.is("ENTITY") || t.is("ENTITIES")) {
    lx.next();
    return TypeKind::Entity;
  }
  if (t.is("RELATIONSHIP") || t.is("RELATIONSHIPS")) {
    lx.next();
    return TypeKind::Relationship;
  }
  lx.fail("'ENTITY' or 'RELATIONSHIP'");
}

inline FeatureSelector parse_selector(Lexer& lx, bool multiple) {
  FeatureSelector s;
  if (lx.accept("*")) {
    s.type = std::string(kWildcard);
  } else {
    s.type = lx.expect_ident("type name or '*'").text;
    if (lx.accept("(")) {
      do s.variations.push_back(parse_variation_id(lx));
      while (lx.accept(","));
      lx.expect(")");
    }
  }
  lx.expect("::");
  s.features.push_back(parse_qname(lx));
  if (multiple)
    while (lx.accept(",")) s.features.push_back(parse_qname(lx));
  return s;
}

inline std::optional<JoinCondition> parse_where(Lexer& lx) {
  if (!lx.accept("WHERE")) return std::nullopt;
  JoinCondition j;
  j.source_feature = parse_qname(lx);
  lx.expect("=");
  j.target_feature = parse_qname(lx);
  return j;
}

inline std::vector<std::string> parse_name_list(Lexer& lx) {
  std::vector<std::string> out{lx.expect_ident().text};
  while (lx.accept(",")) out.push_back(lx.expect_ident().text);
  return out;
}

inline ChangeOp parse_add(Lexer& lx) {
  ChangeOp op;
  const auto& t = lx.peek();
  if (t.is("ENTITY") || t.is("RELATIONSHIP")) {
    op.kind = OpKind::AddType;
    op.flavor = parse_flavor(lx);
    op.types = {lx.expect_ident("type name").text};
    lx.expect(":");
    op.body = athena::parse_braced_features(lx);
    return op;
  }
  if (lx.accept("ATTR")) {
    op.kind = OpKind::AddAttribute;
    op.selector = parse_selector(lx, false);
    lx.expect(":");
    op.data_type = athena::parse_data_type(lx);
    return op;
  }
  if (lx.accept("REF")) {
    op.kind = OpKind::AddReference;
    op.selector = parse_selector(lx, false);
    lx.expect(":");
    if (lx.accept("{")) {
      if (!lx.peek().is("}")) {
        do {
          RefAttribute a;
          a.name = lx.expect_ident("attribute name").text;
          lx.expect(":");
          a.type = athena::parse_data_type(lx);
          op.ref_attributes.push_back(std::move(a));
        } while (lx.accept(","));
      }
      lx.expect("}");
    } else {
      op.scalar = athena::parse_scalar(lx);
      op.has_scalar = true;
    }
    op.cardinality = athena::parse_cardinality(lx);
    lx.expect("TO");
    op.dest_type = lx.expect_ident("referenced entity type").text;
    op.join = parse_where(lx);
    return op;
  }
  if (lx.accept("AGGR")) {
    op.kind = OpKind::AddAggregate;
    op.selector = parse_selector(lx, false);
    lx.expect(":");
    if (lx.peek().is("{")) {
      op.inline_body = true;
      op.body = athena::parse_braced_features(lx);
      op.cardinality = athena::parse_cardinality(lx);
      if (lx.accept("AS")) op.as_keyword = true;
      else if (lx.accept("TO")) op.as_keyword = false;
      else lx.fail("'AS' or 'TO'");
      op.dest_type = lx.expect_ident("new entity type name").text;
    } else {
      op.dest_type = lx.expect_ident("aggregated entity type").text;
      op.cardinality = athena::parse_cardinality(lx);
    }
    return op;
  }
  lx.fail("'ENTITY', 'RELATIONSHIP', 'ATTR', 'REF' or 'AGGR'");
}

inline ChangeOp parse_statement(Lexer& lx) {
  const text::Token kw = lx.peek();
  if (kw.kind != Tok::Ident) lx.fail("operation keyword");
  const std::string& w = kw.text;
  lx.next();
  ChangeOp op;

  auto is_flavor = [&] {
    const auto& t = lx.peek();
    return t.is("ENTITY") || t.is("RELATIONSHIP") || t.is("ENTITIES") || t.is("RELATIONSHIPS");
  };

  if (w == "ADD") return parse_add(lx);
  if (w == "DELETE") {
    if (is_flavor()) {
      op.kind = OpKind::DeleteType;
      op.flavor = parse_flavor(lx);
      op.types = {lx.expect_ident("type name").text};
    } else {
      op.kind = OpKind::DeleteFeature;
      op.selector = parse_selector(lx, true);
    }
    return op;
  }
  if (w == "RENAME") {
    if (is_flavor()) {
      op.kind = OpKind::RenameType;
      op.flavor = parse_flavor(lx);
      op.types = {lx.expect_ident("type name").text};
    } else {
      op.kind = OpKind::RenameFeature;
      op.selector = parse_selector(lx, false);
    }
    lx.expect("TO");
    op.new_name = lx.expect_ident("new name").text;
    return op;
  }
  if (w == "EXTRACT") {
    op.kind = OpKind::ExtractType;
    op.flavor = parse_flavor(lx);
    op.selector = parse_selector(lx, true);
    op.types = {op.selector.type};
    lx.expect("TO");
    op.new_name = lx.expect_ident("new type name").text;
    return op;
  }
  if (w == "SPLIT") {
    op.kind = OpKind::SplitType;
    op.flavor = parse_flavor(lx);
    op.types = {lx.expect_ident("type name").text};
    lx.expect("TO");
    for (int i = 0; i < 2; ++i) {
      if (i == 1) lx.expect("AND");
      SplitPart p;
      p.name = lx.expect_ident("new type name").text;
      lx.expect("{");
      p.features = parse_name_list(lx);
      lx.expect("}");
      op.parts.push_back(std::move(p));
    }
    return op;
  }
  if (w == "MERGE") {
    op.kind = OpKind::MergeType;
    op.flavor = parse_flavor(lx);
    op.types = {lx.expect_ident("type name").text};
    lx.expect(",");
    op.types.push_back(lx.expect_ident("type name").text);
    lx.expect("TO");
    op.new_name = lx.expect_ident("new type name").text;
    return op;
  }
  if (w == "DELVAR" || w == "ADAPT") {
    op.kind = w == "DELVAR" ? OpKind::Delvar : OpKind::Adapt;
    op.flavor = parse_flavor(lx);
    op.types = {lx.expect_ident("type name").text};
    lx.expect("::");
    op.from_variation = parse_variation_id(lx);
    if (op.kind == OpKind::Adapt) {
      lx.expect("TO");
      op.to_variation = parse_variation_id(lx);
    }
    return op;
  }
  if (w == "UNION") {
    op.kind = OpKind::Union;
    op.flavor = parse_flavor(lx);
    op.types = {lx.expect_ident("type name").text};
    return op;
  }
  if (w == "COPY" || w == "MOVE") {
    op.kind = w == "COPY" ? OpKind::CopyFeature : OpKind::MoveFeature;
    op.selector = parse_selector(lx, false);
    lx.expect("TO");
    op.dest_type = lx.expect_ident("destination type").text;
    if (lx.accept("::")) op.new_name = lx.expect_ident("destination feature").text;
    else op.new_name = op.selector.features.front();
    op.join = parse_where(lx);
    return op;
  }
  if (w == "NEST") {
    op.kind = OpKind::NestFeature;
    op.selector = parse_selector(lx, true);
    lx.expect("TO");
    op.new_name = parse_qname(lx);
    return op;
  }
  if (w == "UNNEST") {
    op.kind = OpKind::UnnestFeature;
    op.selector = parse_selector(lx, true);
    lx.expect("FROM");
    op.new_name = parse_qname(lx);
    return op;
  }
  if (w == "CAST") {
    if (lx.accept("ATTR")) op.kind = OpKind::CastAttribute;
    else if (lx.accept("REF")) op.kind = OpKind::CastReference;
    else lx.fail("'ATTR' or 'REF'");
    op.selector = parse_selector(lx, true);
    lx.expect("TO");
    op.scalar = athena::parse_scalar(lx);
    return op;
  }
  if (w == "PROMOTE" || w == "DEMOTE") {
    op.kind = w == "PROMOTE" ? OpKind::PromoteAttribute : OpKind::DemoteAttribute;
    lx.expect("ATTR");
    op.selector = parse_selector(lx, true);
    return op;
  }
  if (w == "MULT") {
    if (lx.accept("REF")) op.kind = OpKind::MultReference;
    else if (lx.accept("AGGR")) op.kind = OpKind::MultAggregate;
    else lx.fail("'REF' or 'AGGR'");
    op.selector = parse_selector(lx, false);
    lx.expect("TO");
    op.cardinality = athena::parse_cardinality(lx);
    return op;
  }
  if (w == "MORPH") {
    if (lx.accept("REF")) op.kind = OpKind::MorphReference;
    else if (lx.accept("AGGR")) op.kind = OpKind::MorphAggregate;
    else lx.fail("'REF' or 'AGGR'");
    op.selector = parse_selector(lx, false);
    op.new_name = lx.accept("TO") ? lx.expect_ident("new feature name").text : op.selector.features.front();
    return op;
  }
  throw UnknownOperationKeyword(kw.line, kw.column, w);
}

inline std::string flavor_word(TypeKind k) { return k == TypeKind::Entity ? "ENTITY" : "RELATIONSHIP"; }

inline std::string print_selector(const FeatureSelector& s) {
  std::string out = s.type;
  if (!s.variations.empty()) {
    out += "(";
    for (std::size_t i = 0; i < s.variations.size(); ++i) out += (i ? ", v" : "v") + std::to_string(s.variations[i]);
    out += ")";
  }
  out += "::";
  for (std::size_t i = 0; i < s.features.size(); ++i) out += (i ? ", " : "") + s.features[i];
  return out;
}

inline std::string print_body(const FeatureList& fs) {
  std::string out = "{ ";
  for (std::size_t i = 0; i < fs.size(); ++i) out += (i ? ", " : "") + athena::print_feature(fs[i]);
  return out + (fs.empty() ? "}" : " }");
}

inline std::string print_where(const std::optional<JoinCondition>& j) {
  return j ? " WHERE " + j->source_feature + "=" + j->target_feature : "";
}

}  // namespace orion_syntax

/// Renders one operation as a single Orion statement.
inline std::string print_op(const ChangeOp& op) {
  using namespace orion_syntax;
  const std::string fl = flavor_word(op.flavor);
  const std::string card(1, op.cardinality.symbol());
  switch (op.kind) {
    case OpKind::AddType: return "ADD " + fl + " " + op.types[0] + ": " + print_body(op.body);
    case OpKind::DeleteType: return "DELETE " + fl + " " + op.types[0];
    case OpKind::RenameType: return "RENAME " + fl + " " + op.types[0] + " TO " + op.new_name;
    case OpKind::ExtractType: return "EXTRACT " + fl + " " + print_selector(op.selector) + " TO " + op.new_name;
    case OpKind::SplitType: {
      std::string s = "SPLIT " + fl + " " + op.types[0] + " TO ";
      for (std::size_t i = 0; i < op.parts.size(); ++i) {
        if (i) s += " AND ";
        s += op.parts[i].name + " { ";
        for (std::size_t j = 0; j < op.parts[i].features.size(); ++j) s += (j ? ", " : "") + op.parts[i].features[j];
        s += " }";
      }
      return s;
    }
    case OpKind::MergeType:
      return "MERGE " + std::string(op.flavor == TypeKind::Entity ? "ENTITIES " : "RELATIONSHIPS ") + op.types[0] +
             ", " + op.types[1] + " TO " + op.new_name;
    case OpKind::Delvar: return "DELVAR " + fl + " " + op.types[0] + "::v" + std::to_string(op.from_variation);
    case OpKind::Adapt:
      return "ADAPT " + fl + " " + op.types[0] + "::v" + std::to_string(op.from_variation) + " TO v" +
             std::to_string(op.to_variation);
    case OpKind::Union: return "UNION " + fl + " " + op.types[0];
    case OpKind::DeleteFeature: return "DELETE " + print_selector(op.selector);
    case OpKind::RenameFeature: return "RENAME " + print_selector(op.selector) + " TO " + op.new_name;
    case OpKind::CopyFeature:
    case OpKind::MoveFeature:
      return std::string(op.kind == OpKind::CopyFeature ? "COPY " : "MOVE ") + print_selector(op.selector) + " TO " +
             op.dest_type + "::" + op.new_name + print_where(op.join);
    case OpKind::NestFeature: return "NEST " + print_selector(op.selector) + " TO " + op.new_name;
    case OpKind::UnnestFeature: return "UNNEST " + print_selector(op.selector) + " FROM " + op.new_name;
    case OpKind::AddAttribute: return "ADD ATTR " + print_selector(op.selector) + ": " + op.data_type.to_string();
    case OpKind::CastAttribute:
      return "CAST ATTR " + print_selector(op.selector) + " TO " + scalar_name(op.scalar);
    case OpKind::PromoteAttribute: return "PROMOTE ATTR " + print_selector(op.selector);
    case OpKind::DemoteAttribute: return "DEMOTE ATTR " + print_selector(op.selector);
    case OpKind::AddReference: {
      std::string s = "ADD REF " + print_selector(op.selector) + ": ";
      if (op.has_scalar) {
        s += scalar_name(op.scalar);
      } else {
        s += "{";
        for (std::size_t i = 0; i < op.ref_attributes.size(); ++i)
          s += std::string(i ? ", " : " ") + op.ref_attributes[i].name + ": " + op.ref_attributes[i].type.to_string();
        s += op.ref_attributes.empty() ? "}" : " }";
      }
      return s + card + " TO " + op.dest_type + print_where(op.join);
    }
    case OpKind::CastReference: return "CAST REF " + print_selector(op.selector) + " TO " + scalar_name(op.scalar);
    case OpKind::MultReference: return "MULT REF " + print_selector(op.selector) + " TO " + card;
    case OpKind::MorphReference: return "MORPH REF " + print_selector(op.selector) + " TO " + op.new_name;
    case OpKind::AddAggregate:
      if (op.inline_body)
        return "ADD AGGR " + print_selector(op.selector) + ": " + print_body(op.body) + card +
               (op.as_keyword ? " AS " : " TO ") + op.dest_type;
      return "ADD AGGR " + print_selector(op.selector) + ": " + op.dest_type + card;
    case OpKind::MultAggregate: return "MULT AGGR " + print_selector(op.selector) + " TO " + card;
    case OpKind::MorphAggregate: return "MORPH AGGR " + print_selector(op.selector) + " TO " + op.new_name;
  }
  return {};
}

inline ChangeScript parse_orion(std::string_view src) {
  text::Lexer lx(src);
  ChangeScript s;
  s.name = lx.expect_ident("script name").text;
  lx.expect("operations");
  lx.expect("Using");
  s.using_schema = lx.expect_ident("schema name").text;
  lx.expect(":");
  s.using_version = static_cast<int>(lx.expect_int("schema version"));
  while (!lx.at_end()) s.ops.push_back(orion_syntax::parse_statement(lx));
  return s;
}

inline std::string print_orion(const ChangeScript& s) {
  std::ostringstream os;
  os << s.name << " operations\n";
  os << "Using " << s.using_schema << ":" << s.using_version << "\n";
  if (!s.ops.empty()) os << "\n";
  for (const auto& op : s.ops) os << print_op(op) << "\n";
  return os.str();
}

}  // namespace orion
