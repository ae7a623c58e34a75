// Translation of change scripts into native migration scripts for a document
// store (MongoDB shell), a columnar store (CQL) and a graph store (Cypher).
#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "orion/evolution.hpp"
#include "orion/orion.hpp"

namespace orion {

enum class Target { Document, Columnar, Graph };

inline const char* target_name(Target t) {
  switch (t) {
    case Target::Document: return "document";
    case Target::Columnar: return "columnar";
    case Target::Graph: return "graph";
  }
  return "?";
}

inline const char* target_extension(Target t) {
  switch (t) {
    case Target::Document: return ".document.js";
    case Target::Columnar: return ".columnar.cql";
    case Target::Graph: return ".graph.cypher";
  }
  return "";
}

/// One entry of a document-store updateMany / bulkWrite.
struct UpdateEntry {
  std::string comment;
  std::string filter;
  std::string update;
  bool operator==(const UpdateEntry&) const = default;
};

struct Statement {
  std::string text;  // rendered, including leading comment lines
  std::vector<std::size_t> source_ops;
  bool unsupported = false;
  std::string collection;             // document updates: "<db>.<Type>"
  std::vector<UpdateEntry> entries;   // non-empty: a stackable update (bulkWrite when > 1)
  bool stackable() const { return !entries.empty(); }
};

struct GeneratedScript {
  Target target = Target::Document;
  std::vector<Statement> statements;

  std::size_t unsupported_count() const {
    return static_cast<std::size_t>(std::count_if(statements.begin(), statements.end(),
                                                  [](const Statement& s) { return s.unsupported; }));
  }
  std::vector<std::size_t> statements_of(std::size_t op) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < statements.size(); ++i)
      if (std::find(statements[i].source_ops.begin(), statements[i].source_ops.end(), op) !=
          statements[i].source_ops.end())
        out.push_back(i);
    return out;
  }
};

namespace codegen {

inline std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

/// Op text for comments; variation ids are printed bare.
inline std::string op_comment(const ChangeOp& op) {
  std::string s = print_op(op);
  if (op.kind == OpKind::Delvar || op.kind == OpKind::Adapt) {
    s = std::regex_replace(s, std::regex("::v(\\d+)"), "::$1");
    s = std::regex_replace(s, std::regex(" TO v(\\d+)$"), " TO $1");
  }
  return s;
}

/// Features a variation adds to the common ones, and the features of sibling
/// variations it lacks, each in declaration order.
inline std::pair<std::vector<std::string>, std::vector<std::string>> variation_signature(const SchemaType& t,
                                                                                          int id) {
  const StructuralVariation* v = t.variation(id);
  std::vector<std::string> present, absent;
  if (!v) return {present, absent};
  for (const auto& f : v->features)
    if (!find_feature(t.common, f.name)) present.push_back(f.name);
  for (const auto& w : t.variations)
    for (const auto& f : w.features)
      if (!find_feature(v->features, f.name) && !find_feature(t.common, f.name) &&
          std::find(absent.begin(), absent.end(), f.name) == absent.end())
        absent.push_back(f.name);
  return {present, absent};
}

// ---------------------------------------------------------------------------
// Shared walk: one schema state per operation.

class Emitter {
 public:
  Emitter(Target target, const Schema& schema) : s_(schema) { out_.target = target; }
  virtual ~Emitter() = default;

  GeneratedScript run(const ChangeScript& script) {
    for (std::size_t i = 0; i < script.ops.size(); ++i) {
      op_ = i;
      const ChangeOp& op = script.ops[i];
      after_ = apply_op(s_, op);
      std::size_t before = out_.statements.size();
      emit(op);
      if (out_.statements.size() == before) unsupported(op);
      s_ = after_;
    }
    return std::move(out_);
  }

 protected:
  virtual void emit(const ChangeOp& op) = 0;

  void add(std::string text) {
    Statement st;
    st.text = std::move(text);
    st.source_ops = {op_};
    out_.statements.push_back(std::move(st));
  }
  void unsupported(const ChangeOp& op) {
    Statement st;
    st.text = "// UNSUPPORTED (" + std::string(target_name(out_.target)) + "): " + op_comment(op);
    st.source_ops = {op_};
    st.unsupported = true;
    out_.statements.push_back(std::move(st));
  }

  const SchemaType& before(const std::string& name) const { return s_.get(name); }
  const SchemaType& after(const std::string& name) const { return after_.get(name); }

  Schema s_;
  Schema after_;
  std::size_t op_ = 0;
  GeneratedScript out_;
};

// ---------------------------------------------------------------------------
// Document store

inline std::string js_default(const DataType& t) {
  switch (t.kind) {
    case DataType::Kind::Scalar:
      switch (t.scalar) {
        case ScalarKind::Integer: return "0";
        case ScalarKind::Double: return "0.0";
        case ScalarKind::Boolean: return "false";
        case ScalarKind::Timestamp: return "new Date(0)";
        default: return "\"\"";
      }
    case DataType::Kind::List:
    case DataType::Kind::Set: return "[]";
    case DataType::Kind::Map: return "{}";
    case DataType::Kind::Tuple: {
      std::vector<std::string> xs;
      for (const auto& e : t.elements) xs.push_back(js_default(e));
      return "[" + join(xs, ", ") + "]";
    }
  }
  return "null";
}

inline int convert_code(ScalarKind k) {
  switch (k) {
    case ScalarKind::Double: return 1;
    case ScalarKind::Boolean: return 8;
    case ScalarKind::Timestamp: return 9;
    case ScalarKind::Integer: return 16;
    default: return 2;
  }
}

class DocumentEmitter : public Emitter {
 public:
  DocumentEmitter(const Schema& s) : Emitter(Target::Document, s) {}

 private:
  std::string coll(const std::string& type) const { return s_.name + "." + type; }

  std::string feature_default(const Feature& f, int depth = 0) const {
    if (f.is_attribute()) return js_default(f.attribute().type);
    if (f.is_reference()) return f.reference().cardinality.unbounded ? "[]" : "null";
    const Aggregate& ag = f.aggregate();
    if (ag.cardinality.unbounded) return "[]";
    if (ag.cardinality.lower == 0 || depth > 3) return "null";
    const SchemaType* t = after_.find(ag.target);
    if (!t) t = s_.find(ag.target);
    if (!t) return "null";
    std::vector<std::string> kv;
    for (const auto& g : t->common) kv.push_back(quote(g.name) + ": " + feature_default(g, depth + 1));
    return "{" + join(kv, ", ") + "}";
  }

  std::string fields_object(const FeatureList& fs) const {
    std::vector<std::string> kv;
    for (const auto& f : fs) kv.push_back(quote(f.name) + ": " + feature_default(f));
    return "{" + join(kv, ", ") + "}";
  }

  std::string variation_filter(const SchemaType& t, int id) const {
    auto [present, absent] = variation_signature(t, id);
    std::vector<std::string> kv;
    for (const auto& n : present) kv.push_back(quote(n) + ": {$exists: true}");
    for (const auto& n : absent) kv.push_back(quote(n) + ": {$exists: false}");
    return "{" + join(kv, ", ") + "}";
  }

  void update(const std::string& type, const std::string& filter, const std::string& upd, const ChangeOp& op) {
    Statement st;
    st.source_ops = {op_};
    st.collection = coll(type);
    st.entries.push_back({op_comment(op), filter, upd});
    st.text = "// " + op_comment(op) + "\n" + st.collection + ".updateMany(" + filter + ", " + upd + ")";
    out_.statements.push_back(std::move(st));
  }

  void scoped_update(const std::string& type, const std::vector<int>& scope, const std::string& upd,
                     const ChangeOp& op) {
    if (scope.empty()) return update(type, "{}", upd, op);
    for (int id : scope) update(type, variation_filter(before(type), id), upd, op);
  }

  void stmt(const std::string& text, const ChangeOp& op) { add("// " + op_comment(op) + "\n" + text); }

  static std::string lookup(const std::string& from, const std::optional<JoinCondition>& j, bool source_is_from,
                            const std::string& as) {
    if (!j) return "{$lookup: {from: " + quote(from) + ", pipeline: [{$limit: 0}], as: " + quote(as) + "}}";
    const std::string& local = source_is_from ? j->target_feature : j->source_feature;
    const std::string& foreign = source_is_from ? j->source_feature : j->target_feature;
    return "{$lookup: {from: " + quote(from) + ", localField: " + quote(local) + ", foreignField: " +
           quote(foreign) + ", as: " + quote(as) + "}}";
  }

  std::string key_of(const std::string& type) const {
    const SchemaType* t = s_.find(type);
    if (t)
      for (const auto& f : t->all_features())
        if (f.is_key()) return f.name;
    return "_id";
  }

  void emit(const ChangeOp& op) override {
    const bool entity = op.flavor == TypeKind::Entity;
    switch (op.kind) {
      case OpKind::AddType:
        if (!entity) return;
        stmt(s_.name + ".createCollection(" + quote(op.types[0]) + ")", op);
        if (!op.body.empty()) update(op.types[0], "{}", "[{$addFields: " + fields_object(op.body) + "}]", op);
        return;
      case OpKind::DeleteType:
        if (entity) stmt(coll(op.types[0]) + ".drop()", op);
        return;
      case OpKind::RenameType:
        if (entity) stmt(coll(op.types[0]) + ".renameCollection(" + quote(op.new_name) + ")", op);
        return;
      case OpKind::ExtractType:
        if (entity) stmt(project_out(op.selector.type, op.selector.features, op.new_name), op);
        return;
      case OpKind::SplitType:
        if (!entity) return;
        for (const auto& p : op.parts) stmt(project_out(op.types[0], p.features, p.name), op);
        stmt(coll(op.types[0]) + ".drop()", op);
        return;
      case OpKind::MergeType:
        if (!entity) return;
        for (const auto& t : op.types)
          stmt(coll(t) + ".aggregate([{$merge: {into: " + quote(op.new_name) + "}}])", op);
        for (const auto& t : op.types) stmt(coll(t) + ".drop()", op);
        return;
      case OpKind::Delvar:
        if (entity) stmt(coll(op.types[0]) + ".remove(" + variation_filter(before(op.types[0]), op.from_variation) + ")", op);
        return;
      case OpKind::Adapt: {
        if (!entity) return;
        const SchemaType& t = before(op.types[0]);
        const StructuralVariation* from = t.variation(op.from_variation);
        const StructuralVariation* to = t.variation(op.to_variation);
        std::vector<std::string> drop;
        FeatureList gain;
        for (const auto& f : from->features)
          if (!find_feature(to->features, f.name)) drop.push_back(quote(f.name));
        for (const auto& f : to->features)
          if (!find_feature(from->features, f.name)) gain.push_back(f);
        std::vector<std::string> stages;
        if (!drop.empty()) stages.push_back("{$unset: [" + join(drop, ", ") + "]}");
        if (!gain.empty()) stages.push_back("{$addFields: " + fields_object(gain) + "}");
        update(t.name, variation_filter(t, op.from_variation), "[ " + join(stages, ", ") + " ]", op);
        return;
      }
      case OpKind::Union: {
        if (!entity) return;
        const SchemaType& t = before(op.types[0]);
        std::vector<std::string> kv;
        for (const auto& f : after(op.types[0]).all_features())
          if (!find_feature(t.common, f.name))
            kv.push_back(quote(f.name) + ": {$ifNull: [" + quote("$" + f.name) + ", " + feature_default(f) + "]}");
        update(t.name, "{}", "[{$addFields: {" + join(kv, ", ") + "}}]", op);
        return;
      }
      case OpKind::DeleteFeature:
        for (const auto& tg : evolution::expand(s_, op.selector))
          scoped_update(tg.origin, op.selector.variations, "{$unset: {" + quote(tg.path) + ": \"\"}}", op);
        return;
      case OpKind::RenameFeature:
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          auto segs = evolution::split_path(tg.path);
          segs.back() = op.new_name;
          scoped_update(tg.origin, op.selector.variations,
                        "{$rename: {" + quote(tg.path) + ": " + quote(join(segs, ".")) + "}}", op);
        }
        return;
      case OpKind::CopyFeature:
      case OpKind::MoveFeature: {
        const std::string& t1 = op.selector.type;
        const std::string& f = op.selector.features[0];
        const Feature* src = before(t1).any_copy(f);
        stmt(coll(op.dest_type) + ".aggregate([" + lookup(t1, op.join, true, "_src") + ", {$addFields: {" +
                 quote(op.new_name) + ": {$ifNull: [{$first: " + quote("$_src." + f) + "}, " +
                 feature_default(*src) + "]}}}, {$addFields: {\"_src\": \"$$REMOVE\"}}, {$out: " +
                 quote(op.dest_type) + "}])",
             op);
        if (op.kind == OpKind::MoveFeature) update(t1, "{}", "{$unset: {" + quote(f) + ": \"\"}}", op);
        return;
      }
      case OpKind::NestFeature:
      case OpKind::UnnestFeature: {
        std::vector<std::string> kv;
        for (const auto& f : op.selector.features) {
          std::string nested = quote(op.new_name + "." + f);
          kv.push_back(op.kind == OpKind::NestFeature ? quote(f) + ": " + nested : nested + ": " + quote(f));
        }
        update(op.selector.type, "{}", "{$rename: {" + join(kv, ", ") + "}}", op);
        return;
      }
      case OpKind::AddAttribute:
        for (const auto& tg : evolution::expand(s_, op.selector, false))
          scoped_update(tg.origin, op.selector.variations,
                        "[{$addFields: {" + quote(tg.path) + ": " + js_default(op.data_type) + "}}]", op);
        return;
      case OpKind::CastAttribute:
      case OpKind::CastReference:
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          const Feature* f = before(tg.type).any_copy(tg.feature);
          bool many = f->is_reference() && f->reference().cardinality.unbounded;
          if (op.selector.wildcard() && f->is_reference() != (op.kind == OpKind::CastReference)) continue;
          std::string code = std::to_string(convert_code(op.scalar));
          std::string conv = many ? "{$map: {input: " + quote("$" + tg.path) + ", in: {$convert: {input: \"$$this\", to: " +
                                        code + "}}}}"
                                  : "{ $convert: { input: " + quote("$" + tg.path) + ", to: " + code + " }}";
          scoped_update(tg.origin, op.selector.variations,
                        "[{$set: { " + quote(tg.path) + ": " + conv + "}}]", op);
        }
        return;
      case OpKind::PromoteAttribute:
      case OpKind::DemoteAttribute: return;
      case OpKind::AddReference: {
        auto tg = evolution::expand(s_, op.selector, false).at(0);
        std::string key = key_of(op.dest_type);
        std::string value = op.cardinality.unbounded ? quote("$_ref." + key) : "{$first: " + quote("$_ref." + key) + "}";
        stmt(coll(tg.origin) + ".aggregate([" + lookup(op.dest_type, op.join, true, "_ref") + ", {$addFields: {" +
                 quote(tg.path) + ": " + value + ", \"_ref\": \"$$REMOVE\"}}, {$out: " + quote(tg.origin) + "}])",
             op);
        return;
      }
      case OpKind::MultReference:
      case OpKind::MultAggregate:
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          const Feature* f = before(tg.type).any_copy(tg.feature);
          bool was_many = f->is_reference() ? f->reference().cardinality.unbounded : f->aggregate().cardinality.unbounded;
          if (was_many == op.cardinality.unbounded) {
            update(tg.origin, "{}", "[{$set: {" + quote(tg.path) + ": " + quote("$" + tg.path) + "}}]", op);
            continue;
          }
          std::string v = quote("$" + tg.path);
          std::string expr = op.cardinality.unbounded
                                 ? "{$cond: [{$or: [{$isArray: " + v + "}, {$eq: [" + v + ", null]}]}, " + v + ", [" + v + "]]}"
                                 : "{$arrayElemAt: [" + v + ", 0]}";
          scoped_update(tg.origin, op.selector.variations, "[{$set: {" + quote(tg.path) + ": " + expr + "}}]", op);
        }
        return;
      case OpKind::MorphReference:
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          const Feature* f = before(tg.type).any_copy(tg.feature);
          if (!f->is_reference()) continue;
          const Reference& rf = f->reference();
          std::string embed = rf.cardinality.unbounded ? "\"$_morph\"" : "{$first: \"$_morph\"}";
          stmt(coll(tg.origin) + ".aggregate([{$lookup: {from: " + quote(rf.target) + ", localField: " +
                   quote(tg.path) + ", foreignField: " + quote(key_of(rf.target)) +
                   ", as: \"_morph\"}}, {$addFields: {" + quote(op.new_name) + ": " + embed + "}}, {$out: " +
                   quote(tg.origin) + "}])",
               op);
          std::vector<std::string> gone{"\"_morph\": \"\""};
          if (op.new_name != tg.feature) gone.push_back(quote(tg.path) + ": \"\"");
          update(tg.origin, "{}", "{$unset: {" + join(gone, ", ") + "}}", op);
        }
        return;
      case OpKind::AddAggregate: {
        auto tg = evolution::expand(s_, op.selector, false).at(0);
        Feature f = Feature::aggr(tg.feature, op.dest_type, op.cardinality);
        scoped_update(tg.origin, op.selector.variations,
                      "[{$addFields: {" + quote(tg.path) + ": " + feature_default(f) + "}}]", op);
        return;
      }
      case OpKind::MorphAggregate:
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          const Feature* f = before(tg.type).any_copy(tg.feature);
          if (!f->is_aggregate()) continue;
          const Aggregate& ag = f->aggregate();
          std::string key = key_of(ag.target);
          std::string path = tg.path;
          std::string body =
              coll(tg.origin) + ".find({" + quote(path) + ": {$exists: true}}).forEach(function (doc) {\n"
              "  var subs = [].concat(doc[" + quote(path) + "] || []);\n"
              "  subs.forEach(function (sub) { " + coll(ag.target) + ".insert(sub); });\n"
              "  var keys = subs.map(function (sub) { return sub[" + quote(key) + "]; });\n"
              "  delete doc[" + quote(path) + "];\n"
              "  doc[" + quote(op.new_name) + "] = " + (ag.cardinality.unbounded ? "keys" : "keys.length ? keys[0] : null") + ";\n"
              "  " + coll(tg.origin) + ".save(doc);\n"
              "})";
          stmt(body, op);
        }
        return;
    }
  }

  std::string project_out(const std::string& type, const std::vector<std::string>& features,
                          const std::string& into) const {
    std::vector<std::string> kv;
    for (const auto& f : features) kv.push_back(quote(f) + ": 1");
    return coll(type) + ".aggregate([{$project: {" + join(kv, ", ") + "}}, {$out: " + quote(into) + "}])";
  }
};

// ---------------------------------------------------------------------------
// Columnar store

inline std::string cql_type(const DataType& t) {
  switch (t.kind) {
    case DataType::Kind::Scalar:
      switch (t.scalar) {
        case ScalarKind::Integer: return "bigint";
        case ScalarKind::Double: return "double";
        case ScalarKind::Boolean: return "boolean";
        case ScalarKind::Timestamp: return "timestamp";
        case ScalarKind::Identifier: return "uuid";
        default: return "text";
      }
    case DataType::Kind::List: return "list<" + cql_type(t.elements[0]) + ">";
    case DataType::Kind::Set: return "set<" + cql_type(t.elements[0]) + ">";
    case DataType::Kind::Map: return "map<" + cql_type(t.elements[0]) + ", " + cql_type(t.elements[1]) + ">";
    case DataType::Kind::Tuple: {
      std::vector<std::string> xs;
      for (const auto& e : t.elements) xs.push_back(cql_type(e));
      return "tuple<" + join(xs, ", ") + ">";
    }
  }
  return "text";
}

inline std::string cql_column_type(const Feature& f) {
  if (f.is_attribute()) return cql_type(f.attribute().type);
  if (f.is_reference()) {
    const Reference& r = f.reference();
    std::string v = r.value_type ? cql_type(*r.value_type) : "text";
    return r.cardinality.unbounded ? "list<" + v + ">" : v;
  }
  std::string udt = "frozen<" + lower(f.aggregate().target) + ">";
  return f.aggregate().cardinality.unbounded ? "list<" + udt + ">" : udt;
}

class ColumnarEmitter : public Emitter {
 public:
  ColumnarEmitter(const Schema& s) : Emitter(Target::Columnar, s) {}

 private:
  static std::string table(const std::string& type) { return lower(type); }
  std::string csv(const std::string& type, int part = 0) const {
    return "'./_mig/" + table(type) + "_" + std::to_string(op_) + (part ? "_" + std::to_string(part) : "") + ".csv'";
  }

  static std::string create_table(const std::string& name, const FeatureList& fs) {
    std::vector<std::string> cols, keys;
    for (const auto& f : fs) {
      cols.push_back(f.name + " " + cql_column_type(f));
      if (f.is_key()) keys.push_back(f.name);
    }
    if (cols.empty()) {
      cols.push_back("id uuid");
      keys.push_back("id");
    }
    if (keys.empty()) keys.push_back(fs.front().name);
    return "CREATE TABLE " + table(name) + " (" + join(cols, ", ") + ", PRIMARY KEY (" + join(keys, ", ") + "));";
  }

  static std::vector<std::string> key_columns(const SchemaType& t) {
    std::vector<std::string> keys;
    auto fs = t.all_features();
    for (const auto& f : fs)
      if (f.is_key()) keys.push_back(f.name);
    if (keys.empty() && !fs.empty()) keys.push_back(fs.front().name);
    return keys;
  }

  static std::string cols(const std::vector<std::string>& xs) { return " (" + join(xs, ", ") + ")"; }

  void copy_to(const std::string& type, const std::vector<std::string>& columns, const std::string& file) {
    add("COPY " + table(type) + (columns.empty() ? "" : cols(columns)) + " TO " + file + " WITH HEADER = TRUE;");
  }
  void copy_from(const std::string& type, const std::vector<std::string>& columns, const std::string& file) {
    add("COPY " + table(type) + (columns.empty() ? "" : cols(columns)) + " FROM " + file + " WITH HEADER = TRUE;");
  }

  /// Tables cannot be renamed or retyped in place: export, drop, recreate,
  /// reload, then reset the per-operation checkpoint table used on re-runs.
  void recreate(const std::string& from, const std::string& to) {
    std::string file = csv(from);
    copy_to(from, {}, file);
    add("DROP TABLE " + table(from) + ";");
    add(create_table(to, after(to).all_features()));
    copy_from(to, {}, file);
    std::string mark = "_mig_" + std::to_string(op_) + "_" + table(to);
    add("DROP TABLE IF EXISTS " + mark + ";");
    add("CREATE TABLE " + mark + " (step int PRIMARY KEY);");
  }

  std::vector<std::string> with_keys(const SchemaType& t, const std::vector<std::string>& fs) const {
    auto out = key_columns(t);
    for (const auto& f : fs)
      if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    return out;
  }

  void emit(const ChangeOp& op) override {
    if (op.flavor == TypeKind::Relationship && op.kind <= OpKind::Union) return;
    switch (op.kind) {
      case OpKind::AddType: add(create_table(op.types[0], op.body)); return;
      case OpKind::DeleteType: add("DROP TABLE " + table(op.types[0]) + ";"); return;
      case OpKind::RenameType: recreate(op.types[0], op.new_name); return;
      case OpKind::ExtractType: {
        const SchemaType& t = before(op.selector.type);
        add(create_table(op.new_name, after(op.new_name).all_features()));
        copy_to(t.name, op.selector.features, csv(t.name));
        copy_from(op.new_name, op.selector.features, csv(t.name));
        return;
      }
      case OpKind::SplitType: {
        for (const auto& p : op.parts) add(create_table(p.name, after(p.name).all_features()));
        int part = 0;
        for (const auto& p : op.parts) {
          ++part;
          copy_to(op.types[0], p.features, csv(op.types[0], part));
          copy_from(p.name, p.features, csv(op.types[0], part));
        }
        add("DROP TABLE " + table(op.types[0]) + ";");
        return;
      }
      case OpKind::MergeType: {
        add(create_table(op.new_name, after(op.new_name).all_features()));
        for (const auto& t : op.types) {
          std::vector<std::string> names;
          for (const auto& f : before(t).all_features()) names.push_back(f.name);
          copy_to(t, names, csv(t));
          copy_from(op.new_name, names, csv(t));
        }
        for (const auto& t : op.types) add("DROP TABLE " + table(t) + ";");
        return;
      }
      case OpKind::Delvar:
      case OpKind::Adapt:
      case OpKind::Union: return;
      case OpKind::DeleteFeature:
        if (!op.selector.variations.empty()) return;
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          if (tg.path.find('.') != std::string::npos) continue;
          add("ALTER TABLE " + table(tg.type) + " DROP " + tg.feature + ";");
        }
        return;
      case OpKind::RenameFeature:
        if (!op.selector.variations.empty()) return;
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          if (tg.path.find('.') != std::string::npos) continue;
          const SchemaType& t = before(tg.type);
          const Feature* f = t.any_copy(tg.feature);
          add("ALTER TABLE " + table(t.name) + " ADD " + op.new_name + " " + cql_column_type(*f) + ";");
          auto keys = key_columns(t);
          auto from = keys, to = keys;
          from.push_back(tg.feature);
          to.push_back(op.new_name);
          copy_to(t.name, from, csv(t.name));
          copy_from(t.name, to, csv(t.name));
          add("ALTER TABLE " + table(t.name) + " DROP " + tg.feature + ";");
        }
        return;
      case OpKind::CopyFeature:
      case OpKind::MoveFeature: {
        const SchemaType& t1 = before(op.selector.type);
        const std::string& f = op.selector.features[0];
        const SchemaType& t2 = before(op.dest_type);
        add("ALTER TABLE " + table(t2.name) + " ADD " + op.new_name + " " + cql_column_type(*t1.any_copy(f)) + ";");
        std::vector<std::string> src{op.join ? op.join->source_feature : key_columns(t1).front(), f};
        std::vector<std::string> dst{op.join ? op.join->target_feature : key_columns(t2).front(), op.new_name};
        copy_to(t1.name, src, csv(t1.name));
        copy_from(t2.name, dst, csv(t1.name));
        if (op.kind == OpKind::MoveFeature) add("ALTER TABLE " + table(t1.name) + " DROP " + f + ";");
        return;
      }
      case OpKind::NestFeature:
      case OpKind::UnnestFeature: return;
      case OpKind::AddAttribute:
        if (!op.selector.variations.empty()) return;
        for (const auto& tg : evolution::expand(s_, op.selector, false)) {
          if (tg.path.find('.') != std::string::npos) continue;
          add("ALTER TABLE " + table(tg.type) + " ADD " + tg.feature + " " + cql_type(op.data_type) + ";");
        }
        return;
      case OpKind::CastAttribute:
      case OpKind::PromoteAttribute:
      case OpKind::DemoteAttribute:
      case OpKind::CastReference: {
        std::set<std::string> done;
        for (const auto& tg : evolution::expand(s_, op.selector))
          if (tg.path.find('.') == std::string::npos && done.insert(tg.type).second) recreate(tg.type, tg.type);
        return;
      }
      case OpKind::AddReference: {
        auto tg = evolution::expand(s_, op.selector, false).at(0);
        const Feature& f = *after(tg.type).any_copy(tg.feature);
        add("ALTER TABLE " + table(tg.type) + " ADD " + tg.feature + " " + cql_column_type(f) + ";");
        const SchemaType& target = before(op.dest_type);
        std::string tkey = key_columns(target).front();
        std::vector<std::string> src{op.join ? op.join->source_feature : tkey, tkey};
        std::vector<std::string> dst{op.join ? op.join->target_feature : key_columns(before(tg.type)).front(),
                                     tg.feature};
        copy_to(target.name, src, csv(target.name));
        copy_from(tg.type, dst, csv(target.name));
        return;
      }
      case OpKind::MultReference:
      case OpKind::MorphReference:
      case OpKind::MultAggregate:
      case OpKind::MorphAggregate: return;
      case OpKind::AddAggregate: {
        auto tg = evolution::expand(s_, op.selector, false).at(0);
        const SchemaType& target = after(op.dest_type);
        std::vector<std::string> fields;
        for (const auto& f : target.all_features()) fields.push_back(f.name + " " + cql_column_type(f));
        add("CREATE TYPE IF NOT EXISTS " + table(target.name) + " (" + join(fields, ", ") + ");");
        add("ALTER TABLE " + table(tg.type) + " ADD " + tg.feature + " " +
            cql_column_type(*after(tg.type).any_copy(tg.feature)) + ";");
        return;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Graph store

inline std::string cypher_default(const DataType& t) {
  switch (t.kind) {
    case DataType::Kind::Scalar:
      switch (t.scalar) {
        case ScalarKind::Integer: return "0";
        case ScalarKind::Double: return "0.0";
        case ScalarKind::Boolean: return "false";
        case ScalarKind::Timestamp: return "datetime({epochMillis: 0})";
        default: return "''";
      }
    case DataType::Kind::List:
    case DataType::Kind::Set: return "[]";
    case DataType::Kind::Map: return "null";
    case DataType::Kind::Tuple: {
      std::vector<std::string> xs;
      for (const auto& e : t.elements) xs.push_back(cypher_default(e));
      return "[" + join(xs, ", ") + "]";
    }
  }
  return "null";
}

inline std::string cypher_feature_default(const Feature& f) {
  if (f.is_attribute()) return cypher_default(f.attribute().type);
  return "null";
}

inline std::string cypher_cast(ScalarKind k, const std::string& x) {
  switch (k) {
    case ScalarKind::Integer: return "toInteger(" + x + ")";
    case ScalarKind::Double: return "toFloat(" + x + ")";
    case ScalarKind::Boolean: return "toBoolean(" + x + ")";
    case ScalarKind::Timestamp: return "datetime(" + x + ")";
    default: return "toString(" + x + ")";
  }
}

inline std::string cypher_name(const std::string& n) {
  static const std::regex plain("[A-Za-z_][A-Za-z0-9_]*");
  return std::regex_match(n, plain) ? n : "`" + n + "`";
}

class GraphEmitter : public Emitter {
 public:
  GraphEmitter(const Schema& s) : Emitter(Target::Graph, s) {}

 private:
  std::string pattern(const std::string& type, const std::string& var = "n") const {
    const SchemaType* t = s_.find(type);
    if (t && !t->is_entity()) return "()-[" + var + ":" + cypher_name(type) + "]->()";
    return "(" + var + ":" + cypher_name(type) + ")";
  }

  std::string where_variation(const SchemaType& t, int id, const std::string& var = "n") const {
    auto [present, absent] = variation_signature(t, id);
    std::vector<std::string> cs;
    for (const auto& n : present) cs.push_back(var + "." + cypher_name(n) + " IS NOT NULL");
    for (const auto& n : absent) cs.push_back(var + "." + cypher_name(n) + " IS NULL");
    return cs.empty() ? "" : " WHERE " + join(cs, " AND ");
  }

  std::string where_scope(const std::string& type, const std::vector<int>& scope) const {
    if (scope.empty()) return "";
    std::vector<std::string> alts;
    for (int id : scope) {
      std::string w = where_variation(before(type), id);
      alts.push_back(w.empty() ? "true" : "(" + w.substr(7) + ")");
    }
    return " WHERE " + join(alts, " OR ");
  }

  static std::string props(const std::vector<std::string>& names, const std::string& var) {
    std::vector<std::string> kv;
    for (const auto& n : names) kv.push_back(cypher_name(n) + ": " + var + "." + cypher_name(n));
    return "{" + join(kv, ", ") + "}";
  }

  static std::vector<std::string> names(const FeatureList& fs) {
    std::vector<std::string> out;
    for (const auto& f : fs) out.push_back(f.name);
    return out;
  }

  std::string create_like(const std::string& type, const std::string& label, const std::vector<std::string>& fs,
                          const std::string& var) const {
    if (before(type).is_entity()) return "CREATE (:" + cypher_name(label) + " " + props(fs, var) + ")";
    return "CREATE (a)-[:" + cypher_name(label) + " " + props(fs, var) + "]->(b)";
  }

  std::string match_endpoints(const std::string& type, const std::string& var) const {
    if (before(type).is_entity()) return "MATCH (" + var + ":" + cypher_name(type) + ")";
    return "MATCH (a)-[" + var + ":" + cypher_name(type) + "]->(b)";
  }

  std::string delete_word(const std::string& type) const { return before(type).is_entity() ? "DETACH DELETE" : "DELETE"; }

  void emit(const ChangeOp& op) override {
    switch (op.kind) {
      case OpKind::AddType: {
        if (op.flavor != TypeKind::Entity) return;
        const std::string label = cypher_name(op.types[0]);
        std::vector<std::string> sets;
        for (const auto& f : op.body)
          sets.push_back("n." + cypher_name(f.name) + " = coalesce(n." + cypher_name(f.name) + ", " +
                         cypher_feature_default(f) + ")");
        std::string first = op.body.empty() ? "id" : op.body.front().name;
        add("CREATE INDEX " + cypher_name(lower(op.types[0]) + "_" + first) + " IF NOT EXISTS FOR (n:" + label +
            ") ON (n." + cypher_name(first) + ")");
        if (!sets.empty()) add("MATCH (n:" + label + ") SET " + join(sets, ", "));
        return;
      }
      case OpKind::DeleteType: add("MATCH " + pattern(op.types[0]) + " " + delete_word(op.types[0]) + " n"); return;
      case OpKind::RenameType:
        if (op.flavor == TypeKind::Entity)
          add("MATCH " + pattern(op.types[0]) + " REMOVE n:" + cypher_name(op.types[0]) + " SET n:" +
              cypher_name(op.new_name));
        else
          add("MATCH " + pattern(op.types[0], "r") + " CALL apoc.refactor.setType(r, " + quote(op.new_name) +
              ") YIELD output RETURN count(output)");
        return;
      case OpKind::ExtractType:
        add(match_endpoints(op.selector.type, "n") + " " +
            create_like(op.selector.type, op.new_name, op.selector.features, "n"));
        return;
      case OpKind::SplitType: {
        std::string text = match_endpoints(op.types[0], "n");
        for (const auto& p : op.parts) text += " " + create_like(op.types[0], p.name, p.features, "n");
        if (op.flavor == TypeKind::Entity) text += " DETACH DELETE n";
        add(text);
        return;
      }
      case OpKind::MergeType: {
        const bool entity = op.flavor == TypeKind::Entity;
        auto fs = names(after(op.new_name).all_features());
        std::string m1 = entity ? "MATCH (x:" + cypher_name(op.types[0]) + ")"
                                : "MATCH ()-[x:" + cypher_name(op.types[0]) + "]->()";
        std::string m2 = entity ? "MATCH (y:" + cypher_name(op.types[1]) + ")"
                                : "MATCH ()-[y:" + cypher_name(op.types[1]) + "]->()";
        std::string create = entity ? "CREATE (:" + cypher_name(op.new_name) + " " + props(fs, "n") + ")"
                                    : "WITH n, xs, ys, startNode(n) AS a, endNode(n) AS b CREATE (a)-[:" +
                                          cypher_name(op.new_name) + " " + props(fs, "n") + "]->(b)";
        std::string del = entity ? "DETACH DELETE" : "DELETE";
        add("OPTIONAL " + m1 + " WITH collect(x) AS xs OPTIONAL " + m2 +
            " WITH xs, collect(y) AS ys UNWIND xs + ys AS n " + create + " WITH DISTINCT xs, ys FOREACH (x IN xs | " +
            del + " x) FOREACH (y IN ys | " + del + " y)");
        return;
      }
      case OpKind::Delvar:
        add("MATCH " + pattern(op.types[0]) + where_variation(before(op.types[0]), op.from_variation) + " " +
            delete_word(op.types[0]) + " n");
        return;
      case OpKind::Adapt: {
        const SchemaType& t = before(op.types[0]);
        const StructuralVariation* from = t.variation(op.from_variation);
        const StructuralVariation* to = t.variation(op.to_variation);
        std::vector<std::string> drop, gain;
        for (const auto& f : from->features)
          if (!find_feature(to->features, f.name)) drop.push_back("n." + cypher_name(f.name));
        for (const auto& f : to->features)
          if (!find_feature(from->features, f.name))
            gain.push_back("n." + cypher_name(f.name) + " = " + cypher_feature_default(f));
        std::string text = "MATCH " + pattern(t.name) + where_variation(t, op.from_variation);
        if (!drop.empty()) text += " REMOVE " + join(drop, ", ");
        if (!gain.empty()) text += " SET " + join(gain, ", ");
        add(text);
        return;
      }
      case OpKind::Union: {
        const SchemaType& t = before(op.types[0]);
        std::vector<std::string> sets;
        for (const auto& f : after(t.name).all_features())
          if (!find_feature(t.common, f.name))
            sets.push_back("n." + cypher_name(f.name) + " = coalesce(n." + cypher_name(f.name) + ", " +
                           cypher_feature_default(f) + ")");
        add("MATCH " + pattern(t.name) + " SET " + (sets.empty() ? "n = n" : join(sets, ", ")));
        return;
      }
      case OpKind::DeleteFeature:
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          if (tg.path.find('.') != std::string::npos) continue;
          add("MATCH " + pattern(tg.type) + where_scope(tg.type, op.selector.variations) + " REMOVE n." +
              cypher_name(tg.feature));
        }
        return;
      case OpKind::RenameFeature:
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          if (tg.path.find('.') != std::string::npos) continue;
          std::string w = where_scope(tg.type, op.selector.variations);
          std::string has = "n." + cypher_name(tg.feature) + " IS NOT NULL";
          add("MATCH " + pattern(tg.type) + (w.empty() ? " WHERE " + has : w.substr(0, 7) + "(" + w.substr(7) + ") AND " + has) +
              " SET n." + cypher_name(op.new_name) + " = n." + cypher_name(tg.feature) + " REMOVE n." +
              cypher_name(tg.feature));
        }
        return;
      case OpKind::CopyFeature:
      case OpKind::MoveFeature: {
        const std::string& t1 = op.selector.type;
        const std::string f = cypher_name(op.selector.features[0]);
        const Feature* src = before(t1).any_copy(op.selector.features[0]);
        std::string value = cypher_feature_default(*src);
        if (op.join)
          value = "coalesce(head([x IN srcs WHERE x." + cypher_name(op.join->source_feature) + " = d." +
                  cypher_name(op.join->target_feature) + " | x." + f + "]), " + value + ")";
        std::string text = "MATCH " + pattern(t1, "s") + " WITH collect(s) AS srcs MATCH " + pattern(op.dest_type, "d") +
                           " SET d." + cypher_name(op.new_name) + " = " + value;
        if (op.kind == OpKind::MoveFeature) text += " WITH DISTINCT srcs FOREACH (x IN srcs | REMOVE x." + f + ")";
        add(text);
        return;
      }
      case OpKind::NestFeature:
      case OpKind::UnnestFeature: return;
      case OpKind::AddAttribute:
        for (const auto& tg : evolution::expand(s_, op.selector, false)) {
          if (tg.path.find('.') != std::string::npos) continue;
          add("MATCH " + pattern(tg.type) + where_scope(tg.type, op.selector.variations) + " SET n." +
              cypher_name(tg.feature) + " = " + cypher_default(op.data_type));
        }
        return;
      case OpKind::CastAttribute:
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          if (tg.path.find('.') != std::string::npos) continue;
          std::string x = "n." + cypher_name(tg.feature);
          add("MATCH " + pattern(tg.type) + where_scope(tg.type, op.selector.variations) + " SET " + x + " = " +
              cypher_cast(op.scalar, x));
        }
        return;
      case OpKind::PromoteAttribute:
      case OpKind::DemoteAttribute:
        for (const auto& tg : evolution::expand(s_, op.selector)) {
          if (tg.path.find('.') != std::string::npos) continue;
          std::string name = cypher_name(tg.type + "_" + tg.feature + "_unique");
          if (op.kind == OpKind::PromoteAttribute)
            add("CREATE CONSTRAINT " + name + " IF NOT EXISTS FOR (n:" + cypher_name(tg.type) + ") REQUIRE n." +
                cypher_name(tg.feature) + " IS UNIQUE");
          else
            add("DROP CONSTRAINT " + name + " IF EXISTS");
        }
        return;
      case OpKind::AddReference: {
        auto tg = evolution::expand(s_, op.selector, false).at(0);
        if (tg.path.find('.') != std::string::npos) return;
        std::string cond = op.join ? "b." + cypher_name(op.join->source_feature) + " = a." +
                                         cypher_name(op.join->target_feature)
                                   : "false";
        std::vector<std::string> kv;
        for (const auto& ra : op.ref_attributes) kv.push_back(cypher_name(ra.name) + ": " + cypher_default(ra.type));
        add("MATCH (a:" + cypher_name(tg.type) + ") MATCH (b:" + cypher_name(op.dest_type) + ") WHERE " + cond +
            " CREATE (a)-[:" + cypher_name(tg.feature) + (kv.empty() ? "" : " {" + join(kv, ", ") + "}") + "]->(b)");
        return;
      }
      default: return;
    }
  }
};

}  // namespace codegen

/// Pre: the script applies to `schema` without failure.
inline void require_applicable(const Schema& schema, const ChangeScript& script) {
  ApplyOutcome out = apply_script(schema, script);
  if (!out.ok())
    throw PreconditionViolation(out.failed_at->clause,
                                "op " + std::to_string(out.failed_at->op_index) + ": " + out.failed_at->message);
}

inline GeneratedScript generate_document(const Schema& schema, const ChangeScript& script) {
  require_applicable(schema, script);
  return codegen::DocumentEmitter(schema).run(script);
}

inline GeneratedScript generate_columnar(const Schema& schema, const ChangeScript& script) {
  require_applicable(schema, script);
  return codegen::ColumnarEmitter(schema).run(script);
}

inline GeneratedScript generate_graph(const Schema& schema, const ChangeScript& script) {
  require_applicable(schema, script);
  return codegen::GraphEmitter(schema).run(script);
}

inline GeneratedScript generate(Target target, const Schema& schema, const ChangeScript& script) {
  switch (target) {
    case Target::Document: return generate_document(schema, script);
    case Target::Columnar: return generate_columnar(schema, script);
    case Target::Graph: return generate_graph(schema, script);
  }
  return {};
}

inline std::string render_bulk(const std::string& collection, const std::vector<UpdateEntry>& entries) {
  std::string out = collection + ".bulkWrite([\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    out += "  // " + e.comment + "\n  {updateMany: {\n    filter: " + e.filter + ",\n    update: " + e.update + "}}";
    out += i + 1 < entries.size() ? ",\n" : "\n";
  }
  return out + "])";
}

/// Merges maximal runs of consecutive updateMany statements on the same
/// collection into one bulkWrite. Other statements end a run.
inline GeneratedScript stack_optimize(const GeneratedScript& in) {
  GeneratedScript out;
  out.target = in.target;
  for (std::size_t i = 0; i < in.statements.size();) {
    const Statement& st = in.statements[i];
    std::size_t j = i + 1;
    if (st.stackable())
      while (j < in.statements.size() && in.statements[j].stackable() &&
             in.statements[j].collection == st.collection)
        ++j;
    if (j - i == 1) {
      out.statements.push_back(st);
    } else {
      Statement merged;
      merged.collection = st.collection;
      for (std::size_t k = i; k < j; ++k) {
        const Statement& x = in.statements[k];
        merged.entries.insert(merged.entries.end(), x.entries.begin(), x.entries.end());
        for (std::size_t op : x.source_ops)
          if (std::find(merged.source_ops.begin(), merged.source_ops.end(), op) == merged.source_ops.end())
            merged.source_ops.push_back(op);
      }
      merged.text = render_bulk(merged.collection, merged.entries);
      out.statements.push_back(std::move(merged));
    }
    i = j;
  }
  return out;
}

inline std::string render(const GeneratedScript& g) {
  std::string out;
  for (const auto& st : g.statements) out += st.text + "\n\n";
  return out;
}

/// `opIndex TAB statementIndex` per line, ordered by statement.
inline std::string provenance_map(const GeneratedScript& g) {
  std::string out;
  for (std::size_t i = 0; i < g.statements.size(); ++i)
    for (std::size_t op : g.statements[i].source_ops) out += std::to_string(op) + "\t" + std::to_string(i) + "\n";
  return out;
}

/// Writes `<base><ext>` and `<base><ext>.map`. Returns the script path.
inline std::filesystem::path write_generated(const GeneratedScript& g, const std::filesystem::path& base) {
  std::filesystem::path script = base.string() + target_extension(g.target);
  if (script.has_parent_path()) std::filesystem::create_directories(script.parent_path());
  std::ofstream(script, std::ios::binary) << render(g);
  std::ofstream(script.string() + ".map", std::ios::binary) << provenance_map(g);
  if (!std::ifstream(script)) throw Error("cannot write " + script.string());
  return script;
}

}  // namespace orion
