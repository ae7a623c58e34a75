// Batch driver over the toolchain: check, evolve, codegen, migrate, propcheck.
// Exit codes: 0 success, 1 semantic failure, 2 parse or IO failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "orion/athena.hpp"
#include "orion/codegen.hpp"
#include "orion/migrate.hpp"
#include "orion/orion.hpp"
#include "orion/propcheck.hpp"

namespace fs = std::filesystem;
using namespace orion;

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_code(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const SyntaxError*>(&e) ||
      dynamic_cast<const FormatError*>(&e) || dynamic_cast<const UnknownFSet*>(&e) ||
      dynamic_cast<const DuplicateName*>(&e))
    return 2;
  return 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

Schema load_schema(const std::string& path) { return parse_athena(AthenaSource{read_file(path), path}); }
ChangeScript load_script(const std::string& path) { return parse_orion(read_file(path)); }

struct Options {
  std::string schema, orion, target = "document", db, out, mode = "strict", store = "aggregate";
  std::uint64_t seed = 1;
  int cases = 200;
};

int cmd_check(const Options& o) {
  Schema s = athena::parse_unchecked(AthenaSource{read_file(o.schema), o.schema});
  auto violations = validate(s);
  for (const auto& v : violations) std::cout << o.schema << ": " << v.rule << " at " << v.path << "\n";
  if (!violations.empty()) return 1;
  std::cerr << "ok: " << s.name << ":" << s.version << ", " << s.all_types().size() << " types\n";
  return 0;
}

int cmd_evolve(const Options& o) {
  Schema s = load_schema(o.schema);
  ChangeScript script = load_script(o.orion);
  ApplyOutcome r = apply_script(s, script);
  for (const auto& e : r.log) std::cerr << "op " << e.op_index << ": " << e.summary << "\n";
  if (!r.ok()) {
    std::cerr << "error: op " << r.failed_at->op_index << ": " << r.failed_at->message << "\n";
    return 1;
  }
  const std::string text = print_athena(r.schema);
  if (o.out.empty()) {
    std::cout << text;
    return 0;
  }
  fs::path dest = o.out;
  if (fs::is_directory(dest) || !dest.has_filename()) dest /= r.schema.name + ".athena";
  write_file(dest, text);
  std::cerr << "wrote " << dest.string() << "\n";
  return 0;
}

Target parse_target(const std::string& t) {
  if (t == "columnar") return Target::Columnar;
  if (t == "graph") return Target::Graph;
  return Target::Document;
}

int cmd_codegen(const Options& o) {
  Schema s = load_schema(o.schema);
  ChangeScript script = load_script(o.orion);
  GeneratedScript g = generate(parse_target(o.target), s, script);
  if (g.target == Target::Document) g = stack_optimize(g);
  std::size_t statements = 0;
  for (const auto& st : g.statements) statements += !st.unsupported;
  if (o.out.empty()) {
    std::cout << render(g);
  } else {
    fs::path path = write_generated(g, fs::path(o.out) / fs::path(o.orion).stem());
    std::cout << "wrote " << path.string() << "\n";
  }
  std::cout << "statements: " << statements << "\nunsupported: " << g.unsupported_count() << "\n";
  return 0;
}

std::string report_text(const MigrationReport& rep) {
  std::string out = "op\tkind\ttouched\tcreated\tdeleted\twarnings\tstatement\n";
  for (const auto& r : rep.ops)
    out += std::to_string(r.op_index) + "\t" + op_kind_name(r.kind) + "\t" + std::to_string(r.touched) + "\t" +
           std::to_string(r.created) + "\t" + std::to_string(r.deleted) + "\t" + std::to_string(r.warnings) + "\t" +
           r.summary + "\n";
  return out;
}

int cmd_migrate(const Options& o) {
  Schema s = load_schema(o.schema);
  ChangeScript script = load_script(o.orion);
  if (!fs::is_directory(o.db)) throw IoError("no database directory " + o.db);
  Database db;
  db.mode = o.store == "graph" ? StoreMode::Graph : StoreMode::Aggregate;
  if (fs::exists(fs::path(o.db) / "manifest")) db = load_database(o.db);
  MigrationResult r;
  try {
    r = migrate(db, s, script, o.mode == "lenient" ? CastMode::Lenient : CastMode::Strict);
  } catch (const DataError& e) {
    std::cerr << "error: op " << e.op_index() << ", record " << e.locator() << ": " << e.what() << "\n";
    return 1;
  }
  const std::string report = report_text(r.report);
  std::cout << report;
  std::cerr << "migrated " << r.db.record_count() << " records, " << r.report.warnings() << " warnings\n";
  if (!o.out.empty()) {
    store_database(r.db, o.out);
    write_file(fs::path(o.out) / "report.tsv", report);
  }
  return 0;
}

int cmd_propcheck(const Options& o) {
  if (o.cases < 1) throw PreconditionViolation("cases >= 1", std::to_string(o.cases));
  GenConfig cfg;
  cfg.seed = o.seed;
  cfg.mode = o.store == "graph" ? StoreMode::Graph : StoreMode::Aggregate;
  auto results = run_suite(cfg, o.cases);
  std::cout << propcheck::format_report(results);
  bool ok = true;
  for (const auto& [k, r] : results) ok = ok && r.ok();
  for (OpKind k : {OpKind::RenameType, OpKind::DeleteType, OpKind::MergeType}) {
    auto sweep = propcheck::exhaustive_sweep(k);
    std::cout << "sweep " << op_kind_name(k) << "\t" << sweep.instances << "\t" << sweep.counterexamples.size() << "\n";
    ok = ok && sweep.counterexamples.empty();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schema evolution toolchain"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> targets{"document", "columnar", "graph"};
  const std::vector<std::string> modes{"strict", "lenient"};
  const std::vector<std::string> stores{"aggregate", "graph"};

  auto* check = app.add_subcommand("check", "Validate an Athena schema");
  check->add_option("--schema", o.schema)->required();

  auto* evolve = app.add_subcommand("evolve", "Apply an Orion script to a schema");
  evolve->add_option("--schema", o.schema)->required();
  evolve->add_option("--orion", o.orion)->required();
  evolve->add_option("--out", o.out);

  auto* codegen = app.add_subcommand("codegen", "Generate database update scripts");
  codegen->add_option("--schema", o.schema)->required();
  codegen->add_option("--orion", o.orion)->required();
  codegen->add_option("--target", o.target)->check(CLI::IsMember(targets));
  codegen->add_option("--out", o.out);

  auto* mig = app.add_subcommand("migrate", "Run a script against a stored database");
  mig->add_option("--schema", o.schema)->required();
  mig->add_option("--orion", o.orion)->required();
  mig->add_option("--db", o.db)->required();
  mig->add_option("--out", o.out);
  mig->add_option("--mode", o.mode)->check(CLI::IsMember(modes));
  mig->add_option("--store", o.store)->check(CLI::IsMember(stores));

  auto* prop = app.add_subcommand("propcheck", "Randomized checks of every operation");
  prop->add_option("--seed", o.seed);
  prop->add_option("--cases", o.cases);
  prop->add_option("--store", o.store)->check(CLI::IsMember(stores));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*check) return cmd_check(o);
    if (*evolve) return cmd_evolve(o);
    if (*codegen) return cmd_codegen(o);
    if (*mig) return cmd_migrate(o);
    if (*prop) return cmd_propcheck(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return 2;
}
