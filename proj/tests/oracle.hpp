// Straight-line per-record reimplementation of the data semantics of every
// change operation, working directly on the JSON interchange form. It reads
// the schema model but none of the library's data, cast or migration code.
#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "orion/change_script.hpp"
#include "orion/model.hpp"

namespace oracle {

using J = nlohmann::ordered_json;
using namespace orion;

struct Failure {
  std::string kind;  // CastError, JoinAmbiguity, MissingKey, UniquenessViolation, DataError
};

struct Db {
  bool graph = false;
  std::map<std::string, J> sets;  // dataset name -> array of record objects

  std::string dump() const {
    std::string out = graph ? "mode GRAPH\n" : "mode AGGREGATE\n";
    for (const auto& [name, recs] : sets) {
      out += "# " + name + "\n";
      for (const auto& r : recs) out += r.dump() + "\n";
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Value shapes in the interchange form

inline bool tagged(const J& j) {
  return j.is_object() && j.size() == 1 && (j.contains("$set") || j.contains("$tuple") || j.contains("$map"));
}
inline bool is_rec(const J& j) { return j.is_object() && !tagged(j); }
inline bool is_ts(const J& j) { return j.is_string() && j.get_ref<const std::string&>().rfind("$ts:", 0) == 0; }
inline bool is_text(const J& j) { return j.is_string() && !is_ts(j); }
inline bool is_set(const J& j) { return j.is_object() && j.size() == 1 && j.contains("$set"); }

inline std::string text_of(const J& j) {
  const auto& s = j.get_ref<const std::string&>();
  return s.rfind("$$", 0) == 0 ? s.substr(1) : s;
}
inline J text(const std::string& s) { return !s.empty() && s[0] == '$' ? J("$" + s) : J(s); }

inline std::string iso(std::int64_t ms) {
  using namespace std::chrono;
  sys_time<milliseconds> tp{milliseconds{ms}};
  auto day = floor<days>(tp);
  year_month_day ymd{day};
  hh_mm_ss<milliseconds> hms{tp - day};
  char buf[48];
  int milli = static_cast<int>(hms.subseconds().count());
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                        static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                        static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                        static_cast<int>(hms.seconds().count()));
  if (milli) n += std::snprintf(buf + n, sizeof buf - n, ".%03d", milli);
  std::snprintf(buf + n, sizeof buf - n, "Z");
  return buf;
}

inline std::optional<std::int64_t> parse_iso(const std::string& s) {
  static const std::regex re(
      R"(^(\d{4})-(\d{2})-(\d{2})(?:[T ](\d{2}):(\d{2}):(\d{2})(?:\.(\d+))?(?:(Z)|([+-])(\d{2}):(\d{2}))?)?$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) return std::nullopt;
  auto num = [&](int i) { return m[i].matched ? std::stoi(m[i].str()) : 0; };
  int h = num(4), mi = num(5), sec = num(6);
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  int ms = 0;
  if (m[7].matched) {
    std::string f = m[7].str().substr(0, 3);
    while (f.size() < 3) f += '0';
    ms = std::stoi(f);
  }
  int offset = 0;
  if (m[9].matched) offset = (m[9].str() == "-" ? -1 : 1) * (num(10) * 60 + num(11));
  using namespace std::chrono;
  year_month_day ymd{year{num(1)}, month{static_cast<unsigned>(num(2))}, day{static_cast<unsigned>(num(3))}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t d = sys_days{ymd}.time_since_epoch().count();
  return ((d * 24 + h) * 60 + mi - offset) * 60000LL + sec * 1000LL + ms;
}

inline J ts(std::int64_t ms) { return J("$ts:" + iso(ms)); }
inline std::int64_t ts_ms(const J& j) { return *parse_iso(j.get_ref<const std::string&>().substr(4)); }

inline std::string shortest(double d) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

inline bool is_scalar(const J& j) {
  return j.is_boolean() || j.is_number_integer() || j.is_number_float() || j.is_string();
}

inline std::string scalar_text(const J& j) {
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  if (j.is_number_float()) return shortest(j.get<double>());
  if (is_ts(j)) return j.get_ref<const std::string&>().substr(4);
  return text_of(j);
}

enum class Shape { Null, Bool, Int, Dbl, Text, Ts, List, Set, Tuple, Map, Rec };

inline Shape shape(const J& j) {
  if (j.is_null()) return Shape::Null;
  if (j.is_boolean()) return Shape::Bool;
  if (j.is_number_integer()) return Shape::Int;
  if (j.is_number_float()) return Shape::Dbl;
  if (is_ts(j)) return Shape::Ts;
  if (j.is_string()) return Shape::Text;
  if (j.is_array()) return Shape::List;
  if (j.contains("$set") && j.size() == 1) return Shape::Set;
  if (j.contains("$tuple") && j.size() == 1) return Shape::Tuple;
  if (j.contains("$map") && j.size() == 1) return Shape::Map;
  return Shape::Rec;
}

/// Semantic value equality: sets and records ignore order, numbers keep their kind.
inline bool same(const J& a, const J& b) {
  Shape sa = shape(a);
  if (sa != shape(b)) return false;
  auto seq = [](const J& x, const J& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!same(x[i], y[i])) return false;
    return true;
  };
  switch (sa) {
    case Shape::Null: return true;
    case Shape::Bool: return a.get<bool>() == b.get<bool>();
    case Shape::Int: return a.get<std::int64_t>() == b.get<std::int64_t>();
    case Shape::Dbl: return a.get<double>() == b.get<double>();
    case Shape::Text:
    case Shape::Ts: return a == b;
    case Shape::List: return seq(a, b);
    case Shape::Tuple: return seq(a["$tuple"], b["$tuple"]);
    case Shape::Map: {
      const J &x = a["$map"], &y = b["$map"];
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!same(x[i][0], y[i][0]) || !same(x[i][1], y[i][1])) return false;
      return true;
    }
    case Shape::Set: {
      const J &x = a["$set"], &y = b["$set"];
      if (x.size() != y.size()) return false;
      for (const auto& e : x)
        if (std::none_of(y.begin(), y.end(), [&](const J& f) { return same(e, f); })) return false;
      return true;
    }
    case Shape::Rec: {
      if (a.size() != b.size()) return false;
      for (auto it = a.begin(); it != a.end(); ++it)
        if (!b.contains(it.key()) || !same(it.value(), b[it.key()])) return false;
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Casts and defaults

inline std::optional<std::int64_t> whole(const std::string& s) {
  std::int64_t v;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}
inline std::optional<double> real(const std::string& s) {
  double v;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}
inline std::optional<std::int64_t> truncate(double d) {
  if (!std::isfinite(d) || std::fabs(d) >= 9.2e18) return std::nullopt;
  return static_cast<std::int64_t>(std::trunc(d));
}

inline std::optional<J> try_cast(const J& v, ScalarKind to) {
  if (v.is_null()) return J(nullptr);
  if (!is_scalar(v)) return std::nullopt;
  const Shape sv = shape(v);
  switch (to) {
    case ScalarKind::String:
    case ScalarKind::Identifier: return text(scalar_text(v));
    case ScalarKind::Integer:
      if (sv == Shape::Int) return J(v);
      if (sv == Shape::Dbl) {
        if (auto i = truncate(v.get<double>())) return J(*i);
        return std::nullopt;
      }
      if (sv == Shape::Text) {
        if (auto i = whole(text_of(v))) return J(*i);
        return std::nullopt;
      }
      if (sv == Shape::Bool) return J(std::int64_t{v.get<bool>() ? 1 : 0});
      return J(ts_ms(v));
    case ScalarKind::Double:
      if (sv == Shape::Dbl) return J(v);
      if (sv == Shape::Int) return J(static_cast<double>(v.get<std::int64_t>()));
      if (sv == Shape::Text) {
        if (auto d = real(text_of(v))) return J(*d);
        return std::nullopt;
      }
      if (sv == Shape::Bool) return J(v.get<bool>() ? 1.0 : 0.0);
      return J(static_cast<double>(ts_ms(v)));
    case ScalarKind::Boolean: {
      if (sv == Shape::Bool) return J(v);
      if (sv == Shape::Int) return J(v.get<std::int64_t>() != 0);
      if (sv != Shape::Text) return std::nullopt;
      std::string s = text_of(v);
      for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (s == "true") return J(true);
      if (s == "false") return J(false);
      return std::nullopt;
    }
    case ScalarKind::Timestamp:
      if (sv == Shape::Ts) return J(v);
      if (sv == Shape::Int) return ts(v.get<std::int64_t>());
      if (sv == Shape::Dbl) {
        if (auto i = truncate(v.get<double>())) return ts(*i);
        return std::nullopt;
      }
      if (sv == Shape::Text) {
        if (auto ms = parse_iso(text_of(v))) return ts(*ms);
        return std::nullopt;
      }
      return std::nullopt;
  }
  return std::nullopt;
}

inline J default_of(const DataType& t) {
  J o = J::object();
  switch (t.kind) {
    case DataType::Kind::Scalar:
      switch (t.scalar) {
        case ScalarKind::Integer: return J(std::int64_t{0});
        case ScalarKind::Double: return J(0.0);
        case ScalarKind::Boolean: return J(false);
        case ScalarKind::Timestamp: return ts(0);
        default: return J("");
      }
    case DataType::Kind::List: return J::array();
    case DataType::Kind::Set: o["$set"] = J::array(); return o;
    case DataType::Kind::Map: o["$map"] = J::array(); return o;
    case DataType::Kind::Tuple: {
      J xs = J::array();
      for (const auto& e : t.elements) xs.push_back(default_of(e));
      o["$tuple"] = xs;
      return o;
    }
  }
  return J(nullptr);
}

inline J cast(const J& v, ScalarKind to, bool strict) {
  if (auto out = try_cast(v, to)) return *out;
  if (strict) throw Failure{"CastError"};
  return default_of(DataType::of(to));
}

inline J default_for(const Feature& f, const Schema& s, int depth = 0);

inline J defaults_record(const SchemaType& t, const Schema& s, int depth) {
  J r = J::object();
  if (depth > 8) return r;
  for (const auto& f : t.common) r[f.name] = default_for(f, s, depth + 1);
  for (const auto& f : t.variations.front().features) r[f.name] = default_for(f, s, depth + 1);
  return r;
}

inline J default_for(const Feature& f, const Schema& s, int depth) {
  if (f.is_attribute()) return default_of(f.attribute().type);
  if (f.is_reference()) return J(nullptr);
  const SchemaType* t = s.find(f.aggregate().target);
  if (!t || f.aggregate().cardinality.lower == 0) return J(nullptr);
  J one = defaults_record(*t, s, depth);
  if (!f.aggregate().cardinality.unbounded) return one;
  J xs = J::array();
  xs.push_back(one);
  return xs;
}

// ---------------------------------------------------------------------------
// Records

inline void rename_field(J& r, const std::string& from, const std::string& to) {
  if (from == to || !r.contains(from)) return;
  J out = J::object();
  for (auto it = r.begin(); it != r.end(); ++it) {
    if (it.key() == to) continue;
    out[it.key() == from ? to : it.key()] = it.value();
  }
  r = std::move(out);
}

inline std::optional<int> variation_of(const J& r, const SchemaType& t) {
  std::vector<std::string> have;
  for (auto it = r.begin(); it != r.end(); ++it)
    if (it.key() != "_out" && it.key() != "_in") have.push_back(it.key());
  std::sort(have.begin(), have.end());
  for (const auto& v : t.variations) {
    std::vector<std::string> want;
    for (const auto& f : t.common) want.push_back(f.name);
    for (const auto& f : v.features) want.push_back(f.name);
    std::sort(want.begin(), want.end());
    if (want == have) return v.id;
  }
  return std::nullopt;
}

inline bool stored(const SchemaType& t, bool graph) { return t.kind == TypeKind::Entity ? t.root : graph; }

inline const Feature* key_of(const SchemaType& t) {
  for (const auto& f : t.all_features())
    if (f.is_attribute() && f.attribute().key) return t.any_copy(f.name);
  return nullptr;
}

// Children first, then the record itself; `fn` returns true to drop the instance.
template <typename Fn>
bool walk(J& r, const SchemaType& t, const Schema& s, const std::string& type, Fn& fn, int depth) {
  if (depth < 64)
    for (const auto& f : t.all_features()) {
      if (!f.is_aggregate() || !r.contains(f.name)) continue;
      const SchemaType* ct = s.find(f.aggregate().target);
      if (!ct) continue;
      J& v = r[f.name];
      if (is_rec(v)) {
        if (walk(v, *ct, s, type, fn, depth + 1)) v = nullptr;
      } else if (v.is_array()) {
        J kept = J::array();
        for (auto& x : v) {
          if (is_rec(x) && walk(x, *ct, s, type, fn, depth + 1)) continue;
          kept.push_back(x);
        }
        v = std::move(kept);
      }
    }
  return t.name == type && fn(r);
}

template <typename Fn>
void each(Db& db, const Schema& s, const std::string& type, Fn fn) {
  for (auto& [name, recs] : db.sets) {
    const SchemaType* t = s.find(name);
    if (!t) continue;
    J kept = J::array();
    for (auto& r : recs)
      if (!walk(r, *t, s, type, fn, 0)) kept.push_back(r);
    recs = std::move(kept);
  }
}

inline std::vector<J> snapshot(const Db& db, const Schema& s, const std::string& type) {
  Db copy = db;
  std::vector<J> out;
  each(copy, s, type, [&](J& r) {
    out.push_back(r);
    return false;
  });
  return out;
}

inline J project(const J& r, const std::vector<std::string>& names, bool relationship) {
  J out = J::object();
  if (relationship)
    for (const char* reserved : {"_out", "_in"})
      if (r.contains(reserved)) out[reserved] = r[reserved];
  for (const auto& n : names)
    if (r.contains(n)) out[n] = r[n];
  return out;
}

inline void change_multiplicity(J& v, bool was, bool now, bool strict) {
  if (was == now) return;
  if (now) {
    J xs = J::array();
    if (!v.is_null()) xs.push_back(v);
    v = xs;
    return;
  }
  const J* xs = v.is_array() ? &v : is_set(v) ? &v["$set"] : nullptr;
  if (!xs) return;
  if (xs->empty()) {
    v = nullptr;
    return;
  }
  if (xs->size() > 1 && strict) throw Failure{"DataError"};
  J first = (*xs)[0];
  v = first;
}

inline J choose_hits(std::vector<J> hits, bool unbounded, bool strict) {
  if (unbounded) {
    J xs = J::array();
    for (auto& h : hits) xs.push_back(h);
    return xs;
  }
  if (hits.empty()) return J(nullptr);
  if (hits.size() > 1 && strict) throw Failure{"JoinAmbiguity"};
  return hits.front();
}

// ---------------------------------------------------------------------------
// Operations

inline void apply(Db& db, const Schema& before, const Schema& after, const ChangeOp& op, bool strict) {
  const std::string& sel = op.selector.type;
  const std::string f0 = op.selector.features.empty() ? "" : op.selector.features[0];
  auto drop = [&](const std::string& n) { db.sets.erase(n); };

  switch (op.kind) {
    case OpKind::AddType:
      if (stored(after.get(op.types[0]), db.graph) && !db.sets.count(op.types[0])) db.sets[op.types[0]] = J::array();
      return;
    case OpKind::DeleteType: drop(op.types[0]); return;
    case OpKind::RenameType:
      if (db.sets.count(op.types[0])) {
        J recs = db.sets[op.types[0]];
        drop(op.types[0]);
        db.sets[op.new_name] = recs;
      }
      return;
    case OpKind::ExtractType:
    case OpKind::SplitType: {
      const std::string src = op.kind == OpKind::ExtractType ? sel : op.types[0];
      std::vector<SplitPart> parts =
          op.kind == OpKind::ExtractType ? std::vector<SplitPart>{{op.new_name, op.selector.features}} : op.parts;
      auto recs = snapshot(db, before, src);
      for (const auto& p : parts) {
        const SchemaType& nt = after.get(p.name);
        if (!stored(nt, db.graph)) continue;
        J out = J::array();
        for (const auto& r : recs) out.push_back(project(r, p.features, nt.kind == TypeKind::Relationship));
        db.sets[p.name] = out;
      }
      if (op.kind == OpKind::SplitType) drop(src);
      return;
    }
    case OpKind::MergeType: {
      J out = J::array();
      for (const auto& n : op.types)
        if (db.sets.count(n))
          for (const auto& r : db.sets[n]) out.push_back(r);
      drop(op.types[0]);
      drop(op.types[1]);
      if (stored(after.get(op.new_name), db.graph)) db.sets[op.new_name] = out;
      return;
    }
    case OpKind::Delvar: {
      const SchemaType& t = before.get(op.types[0]);
      each(db, before, t.name, [&](J& r) { return variation_of(r, t) == op.from_variation; });
      return;
    }
    case OpKind::Adapt: {
      const SchemaType& t = before.get(op.types[0]);
      FeatureList want = t.common;
      for (const auto& f : t.variation(op.to_variation)->features) want.push_back(f);
      each(db, before, t.name, [&](J& r) {
        if (variation_of(r, t) != op.from_variation) return false;
        J out = J::object();
        for (auto it = r.begin(); it != r.end(); ++it)
          if (it.key() == "_out" || it.key() == "_in" ||
              std::any_of(want.begin(), want.end(), [&](const Feature& f) { return f.name == it.key(); }))
            out[it.key()] = it.value();
        for (const auto& f : want)
          if (!out.contains(f.name)) out[f.name] = default_for(f, before);
        r = std::move(out);
        return false;
      });
      return;
    }
    case OpKind::Union: {
      FeatureList all = after.get(op.types[0]).all_features();
      each(db, before, op.types[0], [&](J& r) {
        for (const auto& f : all)
          if (!r.contains(f.name)) r[f.name] = default_for(f, after);
        return false;
      });
      return;
    }
    case OpKind::DeleteFeature:
      each(db, before, sel, [&](J& r) {
        r.erase(f0);
        return false;
      });
      return;
    case OpKind::RenameFeature:
      each(db, before, sel, [&](J& r) {
        rename_field(r, f0, op.new_name);
        return false;
      });
      return;
    case OpKind::CopyFeature:
    case OpKind::MoveFeature: {
      const Feature& f = *before.get(sel).any_copy(f0);
      auto sources = snapshot(db, before, sel);
      each(db, before, op.dest_type, [&](J& r2) {
        J v = default_for(f, before);
        if (op.join && r2.contains(op.join->target_feature)) {
          std::vector<const J*> hits;
          for (const auto& r1 : sources)
            if (r1.contains(op.join->source_feature) &&
                same(r1[op.join->source_feature], r2[op.join->target_feature]))
              hits.push_back(&r1);
          if (hits.size() > 1 && strict) throw Failure{"JoinAmbiguity"};
          if (!hits.empty()) v = hits.front()->contains(f0) ? (*hits.front())[f0] : J(nullptr);
        }
        r2[op.new_name] = v;
        return false;
      });
      if (op.kind == OpKind::MoveFeature)
        each(db, before, sel, [&](J& r) {
          r.erase(f0);
          return false;
        });
      return;
    }
    case OpKind::NestFeature:
      each(db, before, sel, [&](J& r) {
        for (const auto& n : op.selector.features) {
          if (!r.contains(n)) continue;
          J moved = r[n];
          r.erase(n);
          if (!r.contains(op.new_name)) continue;
          J& holder = r[op.new_name];
          if (is_rec(holder)) holder[n] = moved;
          else if (holder.is_array())
            for (auto& x : holder)
              if (is_rec(x)) x[n] = moved;
        }
        return false;
      });
      return;
    case OpKind::UnnestFeature: {
      const SchemaType& e2 = before.get(before.get(sel).any_copy(op.new_name)->aggregate().target);
      each(db, before, sel, [&](J& r) {
        for (const auto& n : op.selector.features) {
          J v = default_for(*e2.any_copy(n), before);
          if (r.contains(op.new_name)) {
            J& holder = r[op.new_name];
            if (is_rec(holder)) {
              if (holder.contains(n)) v = holder[n];
              holder.erase(n);
            } else if (holder.is_array()) {
              bool first = true;
              for (auto& x : holder) {
                if (!is_rec(x)) continue;
                if (first && x.contains(n)) v = x[n];
                first = false;
                x.erase(n);
              }
            }
          }
          r[n] = v;
        }
        return false;
      });
      return;
    }
    case OpKind::AddAttribute:
      each(db, before, sel, [&](J& r) {
        if (!r.contains(f0)) r[f0] = default_of(op.data_type);
        return false;
      });
      return;
    case OpKind::CastAttribute:
      each(db, before, sel, [&](J& r) {
        if (r.contains(f0)) r[f0] = cast(r[f0], op.scalar, strict);
        return false;
      });
      return;
    case OpKind::PromoteAttribute: {
      std::vector<J> seen;
      each(db, before, sel, [&](J& r) {
        if (!r.contains(f0) || r[f0].is_null()) return false;
        for (const auto& x : seen)
          if (same(x, r[f0])) throw Failure{"UniquenessViolation"};
        seen.push_back(r[f0]);
        return false;
      });
      return;
    }
    case OpKind::DemoteAttribute: return;
    case OpKind::AddReference: {
      const Feature* key = key_of(before.get(op.dest_type));
      std::vector<J> sources;
      if (op.join) sources = snapshot(db, before, op.dest_type);
      each(db, before, sel, [&](J& r2) {
        J v = nullptr;
        if (op.join) {
          std::vector<J> hits;
          if (r2.contains(op.join->target_feature))
            for (const auto& r1 : sources)
              if (r1.contains(op.join->source_feature) &&
                  same(r1[op.join->source_feature], r2[op.join->target_feature])) {
                if (!key) hits.push_back(r1[op.join->source_feature]);
                else hits.push_back(r1.contains(key->name) ? r1[key->name] : J(nullptr));
              }
          v = choose_hits(std::move(hits), op.cardinality.unbounded, strict);
        }
        r2[f0] = v;
        return false;
      });
      return;
    }
    case OpKind::CastReference:
      each(db, before, sel, [&](J& r) {
        if (!r.contains(f0)) return false;
        J& v = r[f0];
        if (v.is_array()) {
          for (auto& x : v) x = cast(x, op.scalar, strict);
        } else if (is_set(v)) {
          for (auto& x : v["$set"]) x = cast(x, op.scalar, strict);
        } else {
          v = cast(v, op.scalar, strict);
        }
        return false;
      });
      return;
    case OpKind::MultReference:
    case OpKind::MultAggregate: {
      const Feature& f = *before.get(sel).any_copy(f0);
      const bool was = f.is_reference() ? f.reference().cardinality.unbounded : f.aggregate().cardinality.unbounded;
      each(db, before, sel, [&](J& r) {
        if (r.contains(f0)) change_multiplicity(r[f0], was, op.cardinality.unbounded, strict);
        return false;
      });
      return;
    }
    case OpKind::MorphReference: {
      const std::string target = before.get(sel).any_copy(f0)->reference().target;
      const Feature* key = key_of(before.get(target));
      J pool = db.sets.count(target) ? db.sets[target] : J::array();
      auto lookup = [&](const J& k) -> J {
        if (key)
          for (const auto& rec : pool)
            if (rec.contains(key->name) && same(rec[key->name], k)) return rec;
        if (strict) throw Failure{"MissingKey"};
        return J(nullptr);
      };
      each(db, before, sel, [&](J& r) {
        if (!r.contains(f0)) return false;
        J& v = r[f0];
        if (v.is_array() || is_set(v)) {
          J xs = J::array();
          for (const auto& k : v.is_array() ? v : v["$set"])
            if (J e = lookup(k); !e.is_null()) xs.push_back(e);
          v = xs;
        } else if (!v.is_null()) {
          v = lookup(v);
        }
        rename_field(r, f0, op.new_name);
        return false;
      });
      if (!stored(after.get(target), db.graph)) drop(target);
      return;
    }
    case OpKind::AddAggregate: {
      const Feature& f = *after.get(sel).any_copy(f0);
      each(db, before, sel, [&](J& r) {
        r[f0] = default_for(f, after);
        return false;
      });
      return;
    }
    case OpKind::MorphAggregate: {
      const std::string target = before.get(sel).any_copy(f0)->aggregate().target;
      const SchemaType& nt = after.get(target);
      const Feature* key = key_of(nt);
      const bool keep = stored(nt, db.graph);
      if (keep && !db.sets.count(target)) db.sets[target] = J::array();
      std::int64_t top = 0;
      std::set<std::string> used;
      std::uint64_t counter = 0;
      auto note = [&](const J& k) {
        if (k.is_number_integer()) top = std::max(top, k.get<std::int64_t>());
        if (is_text(k)) used.insert(text_of(k));
      };
      if (key && db.sets.count(target))
        for (const auto& r : db.sets[target])
          if (r.contains(key->name)) note(r[key->name]);
      auto mint = [&](bool integer) -> J {
        if (integer) return J(++top);
        std::string s;
        do s = target + "#" + std::to_string(++counter);
        while (used.count(s));
        used.insert(s);
        return text(s);
      };
      std::vector<J> hoisted;
      auto hoist = [&](J rec) -> J {
        J k;
        if (key) {
          if (rec.contains(key->name) && !rec[key->name].is_null()) {
            k = rec[key->name];
          } else {
            const DataType& kt = key->attribute().type;
            k = mint(kt.is_scalar() && kt.scalar == ScalarKind::Integer);
            rec[key->name] = k;
          }
        } else {
          if (strict) throw Failure{"MissingKey"};
          k = mint(false);
        }
        note(k);
        hoisted.push_back(std::move(rec));
        return k;
      };
      each(db, before, sel, [&](J& r) {
        if (!r.contains(f0)) return false;
        J& v = r[f0];
        if (is_rec(v)) {
          v = hoist(v);
        } else if (v.is_array()) {
          J keys = J::array();
          for (const auto& x : v)
            if (is_rec(x)) keys.push_back(hoist(x));
          v = keys;
        }
        rename_field(r, f0, op.new_name);
        return false;
      });
      if (keep)
        for (auto& h : hoisted) db.sets[target].push_back(std::move(h));
      return;
    }
  }
}

}  // namespace oracle
