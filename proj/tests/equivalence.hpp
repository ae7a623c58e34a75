// Runs one operation through the data engine and through the JSON oracle
// and reports whether the canonical dumps (or error classes) agree.
#pragma once

#include <map>
#include <string>

#include "oracle.hpp"
#include "orion/datagen.hpp"
#include "orion/migrate.hpp"
#include "orion/ndjson.hpp"
#include "orion/propcheck.hpp"

namespace equivalence {

using namespace orion;

struct Outcome {
  std::string dump;
  std::string error;
  bool operator==(const Outcome&) const = default;
};

inline Outcome run_engine(const Database& db, const Schema& s, const ChangeOp& op, CastMode mode) {
  ChangeScript script{"T", s.name, s.version, {op}};
  try {
    return {canonical_dump(migrate(db, s, script, mode).db), ""};
  } catch (const CastError&) {
    return {"", "CastError"};
  } catch (const JoinAmbiguity&) {
    return {"", "JoinAmbiguity"};
  } catch (const MissingKey&) {
    return {"", "MissingKey"};
  } catch (const UniquenessViolation&) {
    return {"", "UniquenessViolation"};
  } catch (const DataError&) {
    return {"", "DataError"};
  } catch (const Error& e) {
    return {"", std::string("Error: ") + e.what()};
  }
}

inline oracle::Db to_oracle(const Database& db) {
  oracle::Db out;
  out.graph = db.mode == StoreMode::Graph;
  for (const auto& [name, d] : db.collections) {
    oracle::J recs = oracle::J::array();
    for (const auto& r : d.records) recs.push_back(oracle::J::parse(record_to_line(r)));
    out.sets[name] = recs;
  }
  return out;
}

inline Outcome run_oracle(const Database& db, const Schema& s, const ChangeOp& op, CastMode mode) {
  oracle::Db d = to_oracle(db);
  try {
    oracle::apply(d, s, apply_op(s, op), op, mode == CastMode::Strict);
  } catch (const oracle::Failure& f) {
    return {"", f.kind};
  }
  return {d.dump(), ""};
}

struct KindTally {
  int cases = 0;
  int agreed = 0;
  int changed = 0;  // oracle output differs from the input
  int errors = 0;   // both sides raised the same error class
  std::size_t max_records = 0;
  std::string first_mismatch;
};

/// At least `seeds` comparisons for one kind on generated schemas, data and operations.
inline KindTally compare_kind(OpKind k, int seeds, std::uint64_t base_seed = 1) {
  KindTally t;
  for (std::uint64_t i = 0; t.cases < seeds && i < static_cast<std::uint64_t>(seeds) * 64; ++i) {
    const std::uint64_t seed = propcheck::mix(propcheck::mix(base_seed, static_cast<std::uint64_t>(k)), i);
    const StoreMode store = i % 2 ? StoreMode::Graph : StoreMode::Aggregate;
    const CastMode cast = i % 3 ? CastMode::Lenient : CastMode::Strict;
    GenConfig cfg;
    cfg.seed = seed;
    cfg.mode = store;
    Schema s = gen_schema(cfg);
    propcheck::Rng rng(seed ^ 0x2545f4914f6cdd1dULL);
    auto op = gen_applicable_op(s, k, rng);
    if (!op) continue;
    DataGenConfig dc;
    dc.max_records = 40;
    Database db = DataGen(s, seed, dc).database(store);
    t.max_records = std::max(t.max_records, db.record_count());
    ++t.cases;
    Outcome a = run_engine(db, s, *op, cast);
    Outcome b = run_oracle(db, s, *op, cast);
    if (a == b) {
      ++t.agreed;
      if (!a.error.empty()) ++t.errors;
      else if (a.dump != canonical_dump(db)) ++t.changed;
    } else if (t.first_mismatch.empty()) {
      t.first_mismatch = "seed " + std::to_string(seed) + " op " + print_op(*op) + "\nengine: " +
                         (a.error.empty() ? a.dump : a.error) + "\noracle: " + (b.error.empty() ? b.dump : b.error);
    }
  }
  return t;
}

}  // namespace equivalence
