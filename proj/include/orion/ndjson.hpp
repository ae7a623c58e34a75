// Newline-delimited JSON interchange for databases: `<dir>/<Type>.ndjson` per
// dataset plus a `manifest` naming the store mode and datasets.
#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "orion/data.hpp"

namespace orion {

using json = nlohmann::ordered_json;

// Strings starting with '$' get one extra '$' so they never collide with tags.
inline constexpr std::string_view kTsPrefix = "$ts:";

inline json value_to_json(const Value& v);

inline json record_to_json(const Record& r) {
  json o = json::object();
  for (const auto& f : r.fields) o[f.name] = value_to_json(f.value);
  return o;
}

inline json value_to_json(const Value& v) {
  using K = Value::Kind;
  switch (v.kind()) {
    case K::Null: return nullptr;
    case K::Str: return v.as_str().starts_with('$') ? "$" + v.as_str() : v.as_str();
    case K::Int: return v.as_int();
    case K::Dbl: return v.as_dbl();
    case K::Bool: return v.as_bool();
    case K::Timestamp: return std::string(kTsPrefix) + format_iso8601(v.as_ts());
    case K::List: {
      json a = json::array();
      for (const auto& x : v.items()) a.push_back(value_to_json(x));
      return a;
    }
    case K::Set:
    case K::Tuple: {
      json a = json::array();
      for (const auto& x : v.items()) a.push_back(value_to_json(x));
      return json{{v.kind() == K::Set ? "$set" : "$tuple", a}};
    }
    case K::Map: {
      json a = json::array();
      for (const auto& e : std::get<MapV>(v.v).entries) a.push_back(json::array({value_to_json(e.key), value_to_json(e.value)}));
      return json{{"$map", a}};
    }
    case K::Embedded: return record_to_json(v.record());
  }
  return nullptr;
}

inline Value value_from_json(const json& j, std::size_t line);

inline Record record_from_json(const json& j, std::size_t line) {
  Record r;
  for (auto it = j.begin(); it != j.end(); ++it) r.fields.push_back(Field{it.key(), value_from_json(it.value(), line)});
  return r;
}

inline Value value_from_json(const json& j, std::size_t line) {
  switch (j.type()) {
    case json::value_t::null: return Value::null();
    case json::value_t::boolean: return Value::boolean(j.get<bool>());
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return Value::integer(j.get<std::int64_t>());
    case json::value_t::number_float: return Value::dbl(j.get<double>());
    case json::value_t::string: {
      const auto& s = j.get_ref<const std::string&>();
      if (s.starts_with("$$")) return Value::str(s.substr(1));
      if (s.starts_with(kTsPrefix)) {
        auto ms = parse_iso8601(std::string_view(s).substr(kTsPrefix.size()));
        if (!ms) throw FormatError("bad timestamp '" + s + "'", line);
        return Value::ts(*ms);
      }
      return Value::str(s);
    }
    case json::value_t::array: {
      std::vector<Value> xs;
      for (const auto& x : j) xs.push_back(value_from_json(x, line));
      return Value::list(std::move(xs));
    }
    case json::value_t::object: {
      if (j.size() == 1) {
        const auto& [k, body] = *j.items().begin();
        if (k == "$set" || k == "$tuple") {
          if (!body.is_array()) throw FormatError(k + " expects an array", line);
          std::vector<Value> xs;
          for (const auto& x : body) xs.push_back(value_from_json(x, line));
          return k == "$set" ? Value::set(std::move(xs)) : Value::tuple(std::move(xs));
        }
        if (k == "$map") {
          if (!body.is_array()) throw FormatError("$map expects an array", line);
          std::vector<MapEntry> es;
          for (const auto& e : body) {
            if (!e.is_array() || e.size() != 2) throw FormatError("$map entries are pairs", line);
            es.push_back(MapEntry{value_from_json(e[0], line), value_from_json(e[1], line)});
          }
          return Value::map(std::move(es));
        }
      }
      return Value::embedded(record_from_json(j, line));
    }
    default: throw FormatError("unsupported JSON value", line);
  }
}

inline std::string record_to_line(const Record& r) { return record_to_json(r).dump(); }

/// Parses one line into a record. Duplicate keys in any object are rejected.
inline Record record_from_line(const std::string& text, std::size_t line) {
  std::vector<std::set<std::string>> open;
  json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& parsed) {
    if (ev == json::parse_event_t::object_start) open.emplace_back();
    else if (ev == json::parse_event_t::object_end) open.pop_back();
    else if (ev == json::parse_event_t::key && !open.back().insert(parsed.get<std::string>()).second)
      throw FormatError("duplicate field '" + parsed.get<std::string>() + "'", line);
    return true;
  };
  json j;
  try {
    j = json::parse(text, cb);
  } catch (const json::exception& e) {
    throw FormatError(e.what(), line);
  }
  if (!j.is_object()) throw FormatError("record is not an object", line);
  return record_from_json(j, line);
}

inline std::string dataset_to_ndjson(const Dataset& d) {
  std::string out;
  for (const auto& r : d.records) out += record_to_line(r) + "\n";
  return out;
}

inline Dataset dataset_from_ndjson(const std::string& type_name, std::istream& in) {
  Dataset d{type_name, {}};
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    d.records.push_back(record_from_line(text, line));
  }
  return d;
}

/// Serializes a whole database as one deterministic string (manifest then datasets by name).
inline std::string canonical_dump(const Database& db) {
  std::string out = std::string("mode ") + store_mode_name(db.mode) + "\n";
  for (const auto& [name, d] : db.collections) out += "# " + name + "\n" + dataset_to_ndjson(d);
  return out;
}

inline std::vector<std::filesystem::path> store_database(const Database& db, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<fs::path> out;
  std::ofstream manifest(dir / "manifest");
  manifest << "mode " << store_mode_name(db.mode) << "\n";
  for (const auto& [name, d] : db.collections) {
    manifest << "type " << name << "\n";
    fs::path p = dir / (name + ".ndjson");
    std::ofstream f(p, std::ios::binary);
    f << dataset_to_ndjson(d);
    if (!f) throw Error("cannot write " + p.string());
    out.push_back(p);
  }
  out.push_back(dir / "manifest");
  return out;
}

inline Database load_database(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(dir / "manifest");
  if (!manifest) throw Error("missing manifest in " + dir.string());
  Database db;
  std::string text;
  std::size_t line = 0;
  while (std::getline(manifest, text)) {
    ++line;
    std::istringstream ss(text);
    std::string key, value;
    if (!(ss >> key)) continue;
    ss >> value;
    if (key == "mode") {
      if (value == "AGGREGATE") db.mode = StoreMode::Aggregate;
      else if (value == "GRAPH") db.mode = StoreMode::Graph;
      else throw FormatError("unknown mode '" + value + "'", line);
    } else if (key == "type" && !value.empty()) {
      std::ifstream f(dir / (value + ".ndjson"));
      if (!f) throw Error("missing dataset file " + (dir / (value + ".ndjson")).string());
      db.collections[value] = dataset_from_ndjson(value, f);
    } else {
      throw FormatError("bad manifest entry '" + text + "'", line);
    }
  }
  return db;
}

}  // namespace orion
