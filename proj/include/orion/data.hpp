// In-memory instance data: values, records, datasets and databases, plus the
// per-value primitives of the data engine (classification, defaults, casts).
#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "orion/errors.hpp"
#include "orion/model.hpp"

namespace orion {

struct Value;
struct Field;
struct MapEntry;

struct Timestamp {
  std::int64_t ms = 0;  // epoch milliseconds, UTC
  bool operator==(const Timestamp&) const = default;
};

struct ListV {
  std::vector<Value> items;
};
struct SetV {
  std::vector<Value> items;  // insertion order, no duplicates
};
struct TupleV {
  std::vector<Value> items;
};
struct MapV {
  std::vector<MapEntry> entries;
};

/// Field map with stable insertion order.
struct Record {
  std::vector<Field> fields;

  const Value* get(std::string_view name) const;
  Value* get(std::string_view name);
  bool has(std::string_view name) const { return get(name) != nullptr; }
  void set(std::string_view name, Value v);
  bool erase(std::string_view name);
  bool rename(std::string_view from, std::string_view to);
  std::vector<std::string> names() const;
};

struct Value {
  using Storage =
      std::variant<std::monostate, std::string, std::int64_t, double, bool, Timestamp, ListV, SetV, MapV, TupleV, Record>;
  enum class Kind { Null, Str, Int, Dbl, Bool, Timestamp, List, Set, Map, Tuple, Embedded };

  Storage v;

  Kind kind() const { return static_cast<Kind>(v.index()); }
  bool is_null() const { return kind() == Kind::Null; }

  static Value null() { return {}; }
  static Value str(std::string s) { return {Storage{std::move(s)}}; }
  static Value integer(std::int64_t i) { return {Storage{i}}; }
  static Value dbl(double d) { return {Storage{d}}; }
  static Value boolean(bool b) { return {Storage{b}}; }
  static Value ts(std::int64_t ms) { return {Storage{Timestamp{ms}}}; }
  static Value list(std::vector<Value> xs) { return {Storage{ListV{std::move(xs)}}}; }
  static Value set(std::vector<Value> xs);
  static Value map(std::vector<MapEntry> es);
  static Value tuple(std::vector<Value> xs) { return {Storage{TupleV{std::move(xs)}}}; }
  static Value embedded(Record r) { return {Storage{std::move(r)}}; }

  const std::string& as_str() const { return std::get<std::string>(v); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v); }
  double as_dbl() const { return std::get<double>(v); }
  bool as_bool() const { return std::get<bool>(v); }
  std::int64_t as_ts() const { return std::get<Timestamp>(v).ms; }
  const std::vector<Value>& items() const;
  std::vector<Value>& items();
  const Record& record() const { return std::get<Record>(v); }
  Record& record() { return std::get<Record>(v); }
};

struct Field {
  std::string name;
  Value value;
};

struct MapEntry {
  Value key;
  Value value;
};

bool operator==(const Value& a, const Value& b);
inline bool operator==(const Field& a, const Field& b) { return a.name == b.name && a.value == b.value; }
inline bool operator==(const MapEntry& a, const MapEntry& b) { return a.key == b.key && a.value == b.value; }
inline bool operator==(const ListV& a, const ListV& b) { return a.items == b.items; }
inline bool operator==(const TupleV& a, const TupleV& b) { return a.items == b.items; }
inline bool operator==(const MapV& a, const MapV& b) { return a.entries == b.entries; }
inline bool operator==(const SetV& a, const SetV& b) {
  if (a.items.size() != b.items.size()) return false;
  return std::all_of(a.items.begin(), a.items.end(),
                     [&](const Value& x) { return std::find(b.items.begin(), b.items.end(), x) != b.items.end(); });
}
/// Records compare as field maps: order-insensitive.
inline bool operator==(const Record& a, const Record& b) {
  if (a.fields.size() != b.fields.size()) return false;
  for (const auto& f : a.fields) {
    const Value* g = b.get(f.name);
    if (!g || !(*g == f.value)) return false;
  }
  return true;
}
inline bool operator==(const Value& a, const Value& b) { return a.v == b.v; }

inline const Value* Record::get(std::string_view name) const {
  for (const auto& f : fields)
    if (f.name == name) return &f.value;
  return nullptr;
}
inline Value* Record::get(std::string_view name) {
  for (auto& f : fields)
    if (f.name == name) return &f.value;
  return nullptr;
}
inline void Record::set(std::string_view name, Value v) {
  if (Value* cur = get(name)) *cur = std::move(v);
  else fields.push_back(Field{std::string(name), std::move(v)});
}
inline bool Record::erase(std::string_view name) {
  auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.name == name; });
  if (it == fields.end()) return false;
  fields.erase(it);
  return true;
}
inline bool Record::rename(std::string_view from, std::string_view to) {
  if (from == to) return has(from);
  for (auto& f : fields)
    if (f.name == from) {
      erase(to);
      for (auto& g : fields)
        if (g.name == from) g.name = std::string(to);
      return true;
    }
  return false;
}
inline std::vector<std::string> Record::names() const {
  std::vector<std::string> out;
  for (const auto& f : fields) out.push_back(f.name);
  return out;
}

inline Value Value::set(std::vector<Value> xs) {
  SetV s;
  for (auto& x : xs)
    if (std::find(s.items.begin(), s.items.end(), x) == s.items.end()) s.items.push_back(std::move(x));
  return {Storage{std::move(s)}};
}
inline Value Value::map(std::vector<MapEntry> es) { return {Storage{MapV{std::move(es)}}}; }

inline const std::vector<Value>& Value::items() const {
  switch (kind()) {
    case Kind::List: return std::get<ListV>(v).items;
    case Kind::Set: return std::get<SetV>(v).items;
    case Kind::Tuple: return std::get<TupleV>(v).items;
    default: throw std::logic_error("value has no items");
  }
}
inline std::vector<Value>& Value::items() {
  return const_cast<std::vector<Value>&>(static_cast<const Value&>(*this).items());
}

inline constexpr std::string_view kOut = "_out";
inline constexpr std::string_view kIn = "_in";

inline bool is_reserved(std::string_view name) { return name == kOut || name == kIn; }

struct Dataset {
  std::string type_name;
  std::vector<Record> records;
  bool operator==(const Dataset&) const = default;
};

enum class StoreMode { Aggregate, Graph };

inline const char* store_mode_name(StoreMode m) { return m == StoreMode::Aggregate ? "AGGREGATE" : "GRAPH"; }

struct Database {
  StoreMode mode = StoreMode::Aggregate;
  std::map<std::string, Dataset> collections;

  Dataset* find(std::string_view name) {
    auto it = collections.find(std::string(name));
    return it == collections.end() ? nullptr : &it->second;
  }
  const Dataset* find(std::string_view name) const {
    auto it = collections.find(std::string(name));
    return it == collections.end() ? nullptr : &it->second;
  }
  std::size_t record_count() const {
    std::size_t n = 0;
    for (const auto& [_, d] : collections) n += d.records.size();
    return n;
  }
  bool operator==(const Database&) const = default;
};

/// Whether instances of `t` live in their own dataset under `mode`.
/// Non-root entities are stored embedded inside their aggregating records.
inline bool has_dataset(const SchemaType& t, StoreMode mode) {
  return t.is_entity() ? t.root : mode == StoreMode::Graph;
}

// ---------------------------------------------------------------------------
// Timestamps

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

}  // namespace detail

/// Parses `YYYY-MM-DD[THH:MM:SS[.fff]][Z|(+|-)HH:MM]` into epoch milliseconds.
inline std::optional<std::int64_t> parse_iso8601(std::string_view s) {
  using namespace std::chrono;
  int y, mo, d, h = 0, mi = 0, sec = 0, ms = 0;
  if (!detail::parse_digits(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || !detail::parse_digits(s, 5, 2, mo) ||
      s[7] != '-' || !detail::parse_digits(s, 8, 2, d))
    return std::nullopt;
  std::size_t pos = 10;
  std::int64_t offset_min = 0;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    if (!detail::parse_digits(s, pos + 1, 2, h) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !detail::parse_digits(s, pos + 4, 2, mi) || pos + 6 >= s.size() || s[pos + 6] != ':' ||
        !detail::parse_digits(s, pos + 7, 2, sec))
      return std::nullopt;
    pos += 9;
    if (pos < s.size() && s[pos] == '.') {
      std::size_t start = ++pos;
      int frac = 0, digits = 0;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
        if (digits < 3) {
          frac = frac * 10 + (s[pos] - '0');
          ++digits;
        }
        ++pos;
      }
      if (pos == start) return std::nullopt;
      while (digits < 3) {
        frac *= 10;
        ++digits;
      }
      ms = frac;
    }
    if (pos < s.size() && s[pos] == 'Z') {
      ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
      int oh, om;
      if (!detail::parse_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
          !detail::parse_digits(s, pos + 4, 2, om))
        return std::nullopt;
      offset_min = (s[pos] == '-' ? -1 : 1) * (oh * 60 + om);
      pos += 6;
    }
  }
  if (pos != s.size() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  return ((days * 24 + h) * 60 + mi - offset_min) * 60000 + sec * 1000LL + ms;
}

/// Canonical text: `YYYY-MM-DDTHH:MM:SSZ`, with `.fff` only when milliseconds are non-zero.
inline std::string format_iso8601(std::int64_t ms) {
  using namespace std::chrono;
  std::int64_t days = detail::floor_div(ms, 86400000);
  std::int64_t rem = ms - days * 86400000;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  int h = static_cast<int>(rem / 3600000), mi = static_cast<int>(rem / 60000 % 60),
      sec = static_cast<int>(rem / 1000 % 60), milli = static_cast<int>(rem % 1000);
  char buf[40];
  if (milli)
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h, mi, sec, milli);
  else
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h, mi, sec);
  return buf;
}

// ---------------------------------------------------------------------------
// Classification and defaults

/// Id of the variation whose full feature-name set equals the record's field
/// names (reserved endpoint fields excluded), or nullopt.
inline std::optional<int> classify_variation(const Record& r, const SchemaType& t) {
  std::vector<std::string> have;
  for (const auto& f : r.fields)
    if (!is_reserved(f.name)) have.push_back(f.name);
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

inline Value default_value(const DataType& t) {
  switch (t.kind) {
    case DataType::Kind::Scalar:
      switch (t.scalar) {
        case ScalarKind::String:
        case ScalarKind::Identifier: return Value::str("");
        case ScalarKind::Integer: return Value::integer(0);
        case ScalarKind::Double: return Value::dbl(0.0);
        case ScalarKind::Boolean: return Value::boolean(false);
        case ScalarKind::Timestamp: return Value::ts(0);
      }
      break;
    case DataType::Kind::List: return Value::list({});
    case DataType::Kind::Set: return Value::set({});
    case DataType::Kind::Map: return Value::map({});
    case DataType::Kind::Tuple: {
      std::vector<Value> xs;
      for (const auto& e : t.elements) xs.push_back(default_value(e));
      return Value::tuple(std::move(xs));
    }
  }
  return Value::null();
}

// ---------------------------------------------------------------------------
// Casts

enum class CastMode { Strict, Lenient };

inline std::string format_double(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

/// Canonical text form of a scalar value; nullopt for structured values.
inline std::optional<std::string> canonical_text(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Str: return v.as_str();
    case Value::Kind::Int: return std::to_string(v.as_int());
    case Value::Kind::Dbl: return format_double(v.as_dbl());
    case Value::Kind::Bool: return v.as_bool() ? "true" : "false";
    case Value::Kind::Timestamp: return format_iso8601(v.as_ts());
    default: return std::nullopt;
  }
}

namespace detail {

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t out;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double out;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty() || !std::isfinite(out)) return std::nullopt;
  return out;
}

inline std::optional<std::int64_t> double_to_int(double d) {
  if (!std::isfinite(d) || d >= 9.2e18 || d <= -9.2e18) return std::nullopt;
  return static_cast<std::int64_t>(d);
}

inline std::optional<Value> try_cast(const Value& v, ScalarKind to) {
  using K = Value::Kind;
  if (v.is_null()) return Value::null();
  switch (to) {
    case ScalarKind::String:
    case ScalarKind::Identifier:
      if (auto t = canonical_text(v)) return Value::str(*t);
      return std::nullopt;
    case ScalarKind::Integer:
      switch (v.kind()) {
        case K::Int: return v;
        case K::Dbl:
          if (auto i = double_to_int(v.as_dbl())) return Value::integer(*i);
          return std::nullopt;
        case K::Str:
          if (auto i = parse_int(v.as_str())) return Value::integer(*i);
          return std::nullopt;
        case K::Bool: return Value::integer(v.as_bool() ? 1 : 0);
        case K::Timestamp: return Value::integer(v.as_ts());
        default: return std::nullopt;
      }
    case ScalarKind::Double:
      switch (v.kind()) {
        case K::Dbl: return v;
        case K::Int: return Value::dbl(static_cast<double>(v.as_int()));
        case K::Str:
          if (auto d = parse_double(v.as_str())) return Value::dbl(*d);
          return std::nullopt;
        case K::Bool: return Value::dbl(v.as_bool() ? 1.0 : 0.0);
        case K::Timestamp: return Value::dbl(static_cast<double>(v.as_ts()));
        default: return std::nullopt;
      }
    case ScalarKind::Boolean:
      switch (v.kind()) {
        case K::Bool: return v;
        case K::Int: return Value::boolean(v.as_int() != 0);
        case K::Str: {
          std::string s = v.as_str();
          std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
          if (s == "true") return Value::boolean(true);
          if (s == "false") return Value::boolean(false);
          return std::nullopt;
        }
        default: return std::nullopt;
      }
    case ScalarKind::Timestamp:
      switch (v.kind()) {
        case K::Timestamp: return v;
        case K::Int: return Value::ts(v.as_int());
        case K::Dbl:
          if (auto i = double_to_int(v.as_dbl())) return Value::ts(*i);
          return std::nullopt;
        case K::Str:
          if (auto ms = parse_iso8601(v.as_str())) return Value::ts(*ms);
          return std::nullopt;
        default: return std::nullopt;
      }
  }
  return std::nullopt;
}

}  // namespace detail

/// Converts a value to a scalar type. Null stays Null. In lenient mode an
/// unconvertible value becomes the target default and `warnings` is incremented.
inline Value cast_value(const Value& v, ScalarKind to, CastMode mode, std::uint64_t* warnings = nullptr) {
  if (auto out = detail::try_cast(v, to)) return *out;
  if (mode == CastMode::Strict) {
    std::string shown = canonical_text(v).value_or("<structured>");
    throw CastError("cannot cast '" + shown + "' to " + scalar_name(to), 0);
  }
  if (warnings) ++*warnings;
  return default_value(DataType::of(to));
}

}  // namespace orion
