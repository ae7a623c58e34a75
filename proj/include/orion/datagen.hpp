// Synthetic instance data conforming to a schema. Deterministic in the RNG seed.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "orion/data.hpp"
#include "orion/model.hpp"

namespace orion {

struct DataGenConfig {
  std::size_t max_records = 20;  // per dataset
  int value_pool = 4;            // small pools make join values collide
  double null_rate = 0.1;        // chance an optional feature holds Null
};

class DataGen {
 public:
  DataGen(const Schema& s, std::uint64_t seed, DataGenConfig cfg = {}) : s_(s), rng_(seed), cfg_(cfg) {}

  Value scalar(ScalarKind k) {
    int pick = uniform(0, cfg_.value_pool - 1);
    switch (k) {
      case ScalarKind::String:
      case ScalarKind::Identifier: {
        // mostly words, sometimes numerals and timestamps so casts both succeed and fail
        int style = uniform(0, 5);
        if (style == 0) return Value::str(std::to_string(pick));
        if (style == 1) return Value::str(format_iso8601(pick * 86400000LL));
        if (style == 2) return Value::str(pick % 2 ? "true" : "False");
        return Value::str(std::string(1, static_cast<char>('a' + pick)));
      }
      case ScalarKind::Integer: return Value::integer(pick);
      case ScalarKind::Double: return Value::dbl(pick + 0.5);
      case ScalarKind::Boolean: return Value::boolean(pick % 2);
      case ScalarKind::Timestamp: return Value::ts(pick * 3600000LL);
    }
    return Value::null();
  }

  Value value(const DataType& t) {
    switch (t.kind) {
      case DataType::Kind::Scalar: return scalar(t.scalar);
      case DataType::Kind::List:
      case DataType::Kind::Set: {
        std::vector<Value> xs;
        for (int i = uniform(0, 2); i > 0; --i) xs.push_back(value(t.elements.at(0)));
        return t.kind == DataType::Kind::List ? Value::list(std::move(xs)) : Value::set(std::move(xs));
      }
      case DataType::Kind::Map: {
        std::vector<MapEntry> es;
        for (int i = uniform(0, 2); i > 0; --i) es.push_back({value(t.elements.at(0)), value(t.elements.at(1))});
        return Value::map(std::move(es));
      }
      case DataType::Kind::Tuple: {
        std::vector<Value> xs;
        for (const auto& e : t.elements) xs.push_back(value(e));
        return Value::tuple(std::move(xs));
      }
    }
    return Value::null();
  }

  /// Key value of the n-th record of a type.
  Value key_for(const SchemaType& t, const Feature& key, std::size_t n) {
    const DataType& kt = key.attribute().type;
    if (kt.is_scalar() && kt.scalar == ScalarKind::Integer) return Value::integer(static_cast<std::int64_t>(n));
    return Value::str(t.name + "-" + std::to_string(n));
  }

  /// One instance of variation `var` of `t`. `ordinal` seeds unique key values.
  Record instance(const SchemaType& t, const StructuralVariation& var, std::size_t ordinal, int depth = 0) {
    Record r;
    FeatureList fs = t.common;
    fs.insert(fs.end(), var.features.begin(), var.features.end());
    for (const auto& f : fs) r.set(f.name, feature_value(t, f, ordinal, depth));
    return r;
  }

  Record instance(const SchemaType& t, std::size_t ordinal, int depth = 0) {
    const auto& v = t.variations.at(uniform(0, static_cast<int>(t.variations.size()) - 1));
    return instance(t, v, ordinal, depth);
  }

  /// Database with a dataset per stored type. References draw keys from the
  /// target dataset sizes; relationship records get `_out`/`_in` endpoints.
  Database database(StoreMode mode) {
    Database db;
    db.mode = mode;
    for (const SchemaType* t : s_.all_types())
      if (has_dataset(*t, mode)) sizes_[t->name] = uniform(0, static_cast<int>(cfg_.max_records));
    for (const SchemaType* t : s_.all_types()) {
      if (!has_dataset(*t, mode)) continue;
      Dataset d{t->name, {}};
      for (std::size_t i = 0; i < sizes_[t->name]; ++i) {
        Record r = instance(*t, i);
        if (!t->is_entity()) {
          Record e;
          e.set(kOut, endpoint());
          e.set(kIn, endpoint());
          for (auto& f : r.fields) e.fields.push_back(std::move(f));
          r = std::move(e);
        }
        d.records.push_back(std::move(r));
      }
      db.collections[t->name] = std::move(d);
    }
    return db;
  }

  int uniform(int lo, int hi) {
    if (hi <= lo) return lo;
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  Value feature_value(const SchemaType& owner, const Feature& f, std::size_t ordinal, int depth) {
    if (f.optional && chance(cfg_.null_rate)) return Value::null();
    if (f.is_attribute()) {
      if (f.attribute().key) return key_for(owner, f, ordinal);
      return value(f.attribute().type);
    }
    if (f.is_reference()) {
      const Reference& rf = f.reference();
      auto one = [&]() -> Value {
        const SchemaType* t = s_.find(rf.target);
        std::size_t n = sizes_.count(rf.target) ? sizes_[rf.target] : 0;
        const Feature* key = nullptr;
        if (t)
          for (const auto& g : t->all_features())
            if (g.is_key()) key = t->any_copy(g.name);
        if (!t || !key || n == 0) return Value::str("missing");
        // occasionally point at a non-existent record
        return key_for(*t, *key, static_cast<std::size_t>(uniform(0, static_cast<int>(n))));
      };
      if (!rf.cardinality.unbounded) return one();
      std::vector<Value> xs;
      for (int i = uniform(rf.cardinality.lower, 2); i > 0; --i) xs.push_back(one());
      return Value::list(std::move(xs));
    }
    const Aggregate& ag = f.aggregate();
    const SchemaType* t = s_.find(ag.target);
    if (!t || depth > 3) return Value::null();
    auto one = [&] { return Value::embedded(instance(*t, 1000 * (ordinal + 1) + counter_++, depth + 1)); };
    if (!ag.cardinality.unbounded) return ag.cardinality.lower == 0 && chance(0.2) ? Value::null() : one();
    std::vector<Value> xs;
    for (int i = uniform(ag.cardinality.lower, 2); i > 0; --i) xs.push_back(one());
    return Value::list(std::move(xs));
  }

  Value endpoint() { return Value::str("n" + std::to_string(uniform(0, cfg_.value_pool))); }

  const Schema& s_;
  std::mt19937_64 rng_;
  DataGenConfig cfg_;
  std::map<std::string, std::size_t> sizes_;
  std::size_t counter_ = 0;
};

}  // namespace orion
