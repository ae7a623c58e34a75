// Change-operation AST produced by the Orion front end.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orion/model.hpp"

namespace orion {

enum class OpKind {
  // schema type
  AddType,
  DeleteType,
  RenameType,
  ExtractType,
  SplitType,
  MergeType,
  // structural variation
  Delvar,
  Adapt,
  Union,
  // feature
  DeleteFeature,
  RenameFeature,
  CopyFeature,
  MoveFeature,
  NestFeature,
  UnnestFeature,
  // attribute
  AddAttribute,
  CastAttribute,
  PromoteAttribute,
  DemoteAttribute,
  // reference
  AddReference,
  CastReference,
  MultReference,
  MorphReference,
  // aggregate
  AddAggregate,
  MultAggregate,
  MorphAggregate,
};

inline constexpr std::array<OpKind, 26> kAllOpKinds = {
    OpKind::AddType,          OpKind::DeleteType,      OpKind::RenameType,       OpKind::ExtractType,
    OpKind::SplitType,        OpKind::MergeType,       OpKind::Delvar,           OpKind::Adapt,
    OpKind::Union,            OpKind::DeleteFeature,   OpKind::RenameFeature,    OpKind::CopyFeature,
    OpKind::MoveFeature,      OpKind::NestFeature,     OpKind::UnnestFeature,    OpKind::AddAttribute,
    OpKind::CastAttribute,    OpKind::PromoteAttribute, OpKind::DemoteAttribute, OpKind::AddReference,
    OpKind::CastReference,    OpKind::MultReference,   OpKind::MorphReference,   OpKind::AddAggregate,
    OpKind::MultAggregate,    OpKind::MorphAggregate,
};

inline const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::AddType: return "AddType";
    case OpKind::DeleteType: return "DeleteType";
    case OpKind::RenameType: return "RenameType";
    case OpKind::ExtractType: return "ExtractType";
    case OpKind::SplitType: return "SplitType";
    case OpKind::MergeType: return "MergeType";
    case OpKind::Delvar: return "Delvar";
    case OpKind::Adapt: return "Adapt";
    case OpKind::Union: return "Union";
    case OpKind::DeleteFeature: return "DeleteFeature";
    case OpKind::RenameFeature: return "RenameFeature";
    case OpKind::CopyFeature: return "CopyFeature";
    case OpKind::MoveFeature: return "MoveFeature";
    case OpKind::NestFeature: return "NestFeature";
    case OpKind::UnnestFeature: return "UnnestFeature";
    case OpKind::AddAttribute: return "AddAttribute";
    case OpKind::CastAttribute: return "CastAttribute";
    case OpKind::PromoteAttribute: return "PromoteAttribute";
    case OpKind::DemoteAttribute: return "DemoteAttribute";
    case OpKind::AddReference: return "AddReference";
    case OpKind::CastReference: return "CastReference";
    case OpKind::MultReference: return "MultReference";
    case OpKind::MorphReference: return "MorphReference";
    case OpKind::AddAggregate: return "AddAggregate";
    case OpKind::MultAggregate: return "MultAggregate";
    case OpKind::MorphAggregate: return "MorphAggregate";
  }
  return "?";
}

inline std::optional<OpKind> op_kind_from_name(std::string_view s) {
  for (OpKind k : kAllOpKinds)
    if (s == op_kind_name(k)) return k;
  return std::nullopt;
}

inline bool is_schema_type_op(OpKind k) { return k <= OpKind::MergeType; }
inline bool is_variation_op(OpKind k) { return k >= OpKind::Delvar && k <= OpKind::Union; }

inline constexpr std::string_view kWildcard = "*";

struct FeatureSelector {
  std::string type;               // type name or "*"
  std::vector<int> variations;    // empty: all variations
  std::vector<std::string> features;  // possibly dotted

  bool wildcard() const { return type == kWildcard; }
  bool operator==(const FeatureSelector&) const = default;
};

struct JoinCondition {
  std::string source_feature;  // resolved on the origin type
  std::string target_feature;  // resolved on the destination type
  bool operator==(const JoinCondition&) const = default;
};

struct SplitPart {
  std::string name;
  std::vector<std::string> features;
  bool operator==(const SplitPart&) const = default;
};

/// One statement of a change script. Which fields are meaningful depends on `kind`.
struct ChangeOp {
  OpKind kind = OpKind::AddType;
  TypeKind flavor = TypeKind::Entity;  // schema-type and variation ops

  std::vector<std::string> types;  // DeleteType/RenameType/Union/...: [t]; MergeType: [t1, t2]
  FeatureSelector selector;        // feature-level ops, Extract, Delvar/Adapt
  std::string new_name;            // TO-name of Rename/Extract/Merge/Morph/Nest/Unnest, Copy/Move destination feature
  std::string dest_type;           // Copy/Move destination, AddReference target, AddAggregate target
  std::vector<SplitPart> parts;    // SplitType
  int from_variation = 0;          // Delvar/Adapt
  int to_variation = 0;            // Adapt
  ScalarKind scalar = ScalarKind::String;  // Cast target; AddReference value type
  bool has_scalar = false;                 // AddReference: value type given
  Cardinality cardinality;                 // Mult, AddReference, AddAggregate
  FeatureList body;                        // AddType body; AddAggregate inline body
  std::vector<RefAttribute> ref_attributes;  // AddReference graph attributes
  DataType data_type;                      // AddAttribute type
  std::optional<JoinCondition> join;
  bool inline_body = false;  // AddAggregate with `{...}` body creating dest_type
  bool as_keyword = true;    // AddAggregate spelled with AS (true) or TO (false)

  bool operator==(const ChangeOp&) const = default;
};

struct ChangeScript {
  std::string name;
  std::string using_schema;
  int using_version = 1;
  std::vector<ChangeOp> ops;
  bool operator==(const ChangeScript&) const = default;
};

}  // namespace orion
