// Command-line front end: refine, verify-equivalence, sweep-tau, report, eval.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "schemaref/error.hpp"
#include "schemaref/hashing.hpp"
#include "schemaref/log.hpp"
#include "schemaref/pipeline.hpp"
#include "schemaref/sqlite_db.hpp"
#include "schemaref/synthesis.hpp"
#include "schemaref/workload.hpp"

namespace fs = std::filesystem;
using namespace schemaref;
using nlohmann::json;

namespace {

struct ConfigFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::vector<std::string> databases;
  std::string workload, output;
  std::optional<double> tau_min;
  std::optional<std::uint64_t> seed;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("-c,--config", f.config, "key = value run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--set", f.overrides, "override one setting, e.g. --set k=5");
  cmd->add_option("--database", f.databases, "SQLite database (repeatable)");
  cmd->add_option("--workload", f.workload, "workload JSONL or Spider/BIRD JSON");
  cmd->add_option("-o,--output", f.output, "run directory");
  cmd->add_option("--tau-min", f.tau_min, "minimum improvement to commit a rename");
  cmd->add_option("--seed", f.seed, "sampling seed");
}

RunConfig build_config(const ConfigFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
  const fs::path cwd = fs::current_path();
  for (const auto& o : f.overrides) apply_override(c, o, cwd);
  if (!f.databases.empty()) {
    c.databases.clear();
    for (const auto& d : f.databases) c.databases.push_back(fs::absolute(d));
  }
  if (!f.workload.empty()) c.workload = fs::absolute(f.workload);
  if (!f.output.empty()) c.output = fs::absolute(f.output);
  if (f.tau_min) c.tau_min = *f.tau_min;
  if (f.seed) c.seed = *f.seed;
  return c;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_refine(const ConfigFlags& flags) {
  const RunConfig config = build_config(flags);
  auto result = run_pipeline(config);
  if (result.exit_code == 1) {
    std::cerr << "refine failed after phase '" << result.last_good_phase << "': " << result.error << "\n";
    return 1;
  }
  std::ifstream in(config.output / "report.txt");
  std::cout << in.rdbuf();
  std::cout << "run directory: " << config.output.string() << "\n"
            << "uncached backend calls: " << result.backend_calls << "\n";
  if (result.exit_code == 2) std::cerr << "equivalence check found discrepancies\n";
  return result.exit_code;
}

int cmd_verify(const std::string& view_db, const std::string& workload, std::string database, std::size_t parallelism) {
  fs::path base = database;
  if (base.empty()) {
    auto conn = sqlite::Connection::open(view_db, sqlite::OpenMode::ReadOnly);
    auto st = conn.prepare("SELECT value FROM schemaref_meta WHERE key = 'base_path'");
    if (!st.step()) throw Error(view_db + " does not record its base database; pass --database");
    base = st.column_text(0);
  }
  const SchemaModel schema = load_schema(base);
  auto loaded = load_view_layer(view_db, schema);
  const std::string hash_before = sha256_file(base);
  if (!loaded.base_sha256.empty() && loaded.base_sha256 != hash_before)
    log::warn("base database differs from the one the views were built over");
  auto items = ingest_workload(workload, schema, base).items;
  auto report = equivalence_check(loaded.layer, items, schema, base, parallelism);
  if (sha256_file(base) != hash_before) throw Error("base database changed during the check");
  for (const auto& d : report.discrepancies)
    std::cout << "item " << d.item << ": " << d.reason << "\n  gold:      " << d.gold_sql
              << "\n  rewritten: " << d.rewritten_sql << "\n";
  std::cout << report.checked << " queries checked, " << report.discrepancies.size() << " discrepancies\n";
  return report.ok() ? 0 : 2;
}

int cmd_sweep(const ConfigFlags& flags, const std::string& taus_text) {
  const RunConfig config = build_config(flags);
  std::vector<double> taus;
  std::stringstream ss(taus_text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf" || item == "infinity") taus.push_back(std::numeric_limits<double>::infinity());
    else taus.push_back(std::stod(item));
  }
  auto rows = sweep_tau(config, taus);
  std::printf("%-10s %-20s %10s %8s %10s %7s\n", "tau", "database", "committed", "renamed", "exacc", "misses");
  for (const auto& r : rows)
    std::printf("%-10s %-20s %10zu %8zu %10s %7zu\n", std::isinf(r.tau) ? "inf" : fixed(r.tau, 3).c_str(),
                r.db_id.empty() ? "(all)" : r.db_id.c_str(), r.committed, r.renamed,
                r.exacc ? fixed(*r.exacc, 4).c_str() : "-", r.cache_misses);
  return 0;
}

int cmd_report(const std::string& run_dir, bool as_json) {
  const fs::path path = fs::path(run_dir) / "report.json";
  std::ifstream in(path);
  if (!in) throw Error("no report.json in " + run_dir + "; run `refine` first");
  const json j = json::parse(in);
  if (as_json) std::cout << j.dump(2) << "\n";
  else std::cout << render_text(j);
  return 0;
}

int cmd_eval(const ConfigFlags& flags, const std::string& view_db, std::vector<std::string> backend_ids,
             std::string cache_path, std::size_t parallelism) {
  RunConfig config = build_config(flags);
  if (!backend_ids.empty()) config.verifiers = backend_ids;
  if (config.databases.size() != 1) throw Error("eval needs exactly one --database");
  if (config.workload.empty()) throw Error("eval needs --workload");
  const fs::path db = config.databases.front();
  const SchemaModel schema = load_schema(db);
  const std::string hash_before = sha256_file(db);
  DataSource data(db, schema);
  auto cache = cache_path.empty() ? std::make_shared<ResponseCache>() : std::make_shared<ResponseCache>(cache_path);
  auto models = make_verifiers(config, cache, config.replay_only);

  ExecutableSchema target = ExecutableSchema::base(db);
  SchemaModel visible = schema;
  if (!view_db.empty()) {
    auto loaded = load_view_layer(view_db, schema);
    visible = apply_mapping(schema, loaded.layer.mapping);
    target.view_layer = std::make_shared<const ViewLayer>(std::move(loaded.layer));
  }
  auto items = ingest_workload(config.workload, schema, db).items;
  if (items.empty()) throw Error("no workload items for " + schema.db_id());
  EvalContext ctx{target, visible, &data, config.samples_per_table, config.timeout, parallelism};
  double sum = 0;
  for (const auto& m : models) {
    const double v = exacc(*m, ctx, items).value;
    sum += v;
    std::cout << m->id() << "\t" << fixed(v, 4) << "\n";
  }
  std::cout << "quality\t" << fixed(sum / static_cast<double>(models.size()), 4) << "\t(" << items.size()
            << " items)\n";
  if (sha256_file(db) != hash_before) throw Error("base database changed during evaluation");
  return 0;
}

int cmd_make_db(const std::string& sql_path, const std::string& out) {
  std::ifstream in(sql_path);
  if (!in) throw Error("cannot read " + sql_path);
  std::stringstream buf;
  buf << in.rdbuf();
  if (fs::exists(out)) throw Error(out + " already exists");
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  auto conn = sqlite::Connection::open(out, sqlite::OpenMode::ReadWriteCreate);
  conn.exec(buf.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Execution-grounded column renaming for Text-to-SQL over SQLite"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "errors only");

  ConfigFlags refine_flags;
  auto* refine = app.add_subcommand("refine", "run the full refinement pipeline");
  add_config_flags(refine, refine_flags);

  std::string view_db, workload, database;
  std::size_t parallelism = 4;
  auto* verify = app.add_subcommand("verify-equivalence", "check gold queries against a view database");
  verify->add_option("--view-db", view_db, "view database written by refine")->required()->check(CLI::ExistingFile);
  verify->add_option("--workload", workload, "workload file")->required()->check(CLI::ExistingFile);
  verify->add_option("--database", database, "base database (default: the one recorded in the view database)");
  verify->add_option("-j,--parallelism", parallelism, "concurrent queries");

  ConfigFlags sweep_flags;
  std::string taus;
  auto* sweep = app.add_subcommand("sweep-tau", "recompute decisions for several thresholds from a finished run");
  add_config_flags(sweep, sweep_flags);
  sweep->add_option("--tau", taus, "comma-separated thresholds, e.g. 0.01,0.05,inf")->required();

  std::string run_dir;
  bool as_json = false;
  auto* report = app.add_subcommand("report", "print the report of a finished run");
  report->add_option("run_dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  report->add_flag("--json", as_json, "print report.json");

  ConfigFlags eval_flags;
  std::string eval_view_db, cache_path;
  std::vector<std::string> backends;
  std::size_t eval_parallelism = 4;
  auto* eval = app.add_subcommand("eval", "execution accuracy of backends on a database or view database");
  add_config_flags(eval, eval_flags);
  eval->add_option("--view-db", eval_view_db, "evaluate through this view database")->check(CLI::ExistingFile);
  eval->add_option("--backend", backends, "backend id (repeatable; default from config or mock)");
  eval->add_option("--cache", cache_path, "response cache file");
  eval->add_option("-j,--parallelism", eval_parallelism, "concurrent queries");

  std::string sql_path, out_db;
  auto* make_db = app.add_subcommand("make-db", "create a SQLite database from a SQL script");
  make_db->add_option("--sql", sql_path, "SQL script")->required()->check(CLI::ExistingFile);
  make_db->add_option("--out", out_db, "database file to create")->required();

  CLI11_PARSE(app, argc, argv);
  log::set_level(verbose ? log::Level::Debug : quiet ? log::Level::Error : log::Level::Warning);

  try {
    if (*refine) return cmd_refine(refine_flags);
    if (*verify) return cmd_verify(view_db, workload, database, parallelism);
    if (*sweep) return cmd_sweep(sweep_flags, taus);
    if (*report) return cmd_report(run_dir, as_json);
    if (*eval) return cmd_eval(eval_flags, eval_view_db, backends, cache_path, eval_parallelism);
    if (*make_db) return cmd_make_db(sql_path, out_db);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
