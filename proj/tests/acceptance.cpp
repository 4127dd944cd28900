// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Optional --database/--workload add a user-supplied database to
// the end-to-end runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "random_plans.hpp"
#include "schemaref/log.hpp"
#include "schemaref/pipeline.hpp"
#include "schemaref/sql_refs.hpp"
#include "test_support.hpp"

using namespace schemaref;
using namespace schemaref::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Run {
  std::string name;
  RunConfig config;
  std::map<fs::path, std::pair<std::string, std::string>> hashes;  // db -> before, after
  PipelineResult result;
  double seconds = 0;

  const DatabaseReport* database(const std::string& db_id) const {
    for (const auto& d : result.report.databases)
      if (d.db_id == db_id) return &d;
    return nullptr;
  }
};

Run run_case(std::string name, RunConfig config) {
  Run r{std::move(name), std::move(config), {}, {}, 0};
  for (const auto& db : r.config.databases) r.hashes[db].first = sha256_file(db);
  const auto t0 = Clock::now();
  r.result = run_pipeline(r.config);
  r.seconds = seconds_since(t0);
  for (const auto& db : r.config.databases) r.hashes[db].second = sha256_file(db);
  return r;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::vector<WorkloadItem> workload_for(const RunConfig& c, const fs::path& db, const SchemaModel& schema) {
  IngestOptions opts;
  opts.timeout = c.timeout;
  return ingest_workload(c.workload, schema, db, opts).items;
}

// Mean over models of each candidate's fraction of correct outcomes,
// straight from the score log.
std::map<ColumnId, std::map<std::string, double>> log_means(const fs::path& log) {
  std::map<ColumnId, std::map<std::string, std::map<std::string, std::pair<int, int>>>> tally;
  for (const auto& e : ScoreLog::read(log)) {
    auto& t = tally[e.record.column][e.record.candidate][e.record.model];
    for (const auto& o : e.record.outcomes) {
      t.first += o.correct;
      ++t.second;
    }
  }
  std::map<ColumnId, std::map<std::string, double>> out;
  for (const auto& [col, cands] : tally)
    for (const auto& [cand, models] : cands) {
      double sum = 0;
      for (const auto& [_, t] : models) sum += t.second ? static_cast<double>(t.first) / t.second : 0.0;
      out[col][cand] = sum / static_cast<double>(models.size());
    }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  fs::path user_db, user_workload;
  app.add_option("--database", user_db, "extra SQLite database for the end-to-end checks")->check(CLI::ExistingFile);
  app.add_option("--workload", user_workload, "workload for --database")->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);
  if (user_db.empty() != user_workload.empty()) {
    std::fprintf(stderr, "--database and --workload go together\n");
    return 64;
  }
  log::set_level(log::Level::Error);

  TempDir work;
  fs::create_directories(work / "tiny");
  fs::create_directories(work / "tiny_clean");
  fs::create_directories(work / "retail");
  const fs::path tiny_db = build_fixture_db("tiny_company", work / "tiny");
  const fs::path tiny_clean = build_db(fixture_file("tiny_company", "schema_clean.sql"), work / "tiny_clean",
                                       "tiny_company");
  const fs::path retail_db = build_fixture_db("retail", work / "retail");

  RunConfig tiny;
  tiny.databases = {tiny_db};
  tiny.workload = fixture_file("tiny_company", "workload.jsonl");
  tiny.clean_databases = {tiny_clean};
  tiny.clean_workload = fixture_file("tiny_company", "workload_clean.jsonl");
  tiny.seed = 7;
  tiny.output = work / "run_tiny";

  RunConfig retail;
  retail.databases = {retail_db};
  retail.workload = fixture_file("retail", "workload.jsonl");
  retail.dictionary = fixture_file("retail", "abbreviations.tsv");
  retail.seed = 7;
  retail.output = work / "run_retail";

  std::vector<Run> runs;
  runs.push_back(run_case("tiny_company", tiny));
  runs.push_back(run_case("retail", retail));
  RunConfig tiny_inf = tiny;
  tiny_inf.tau_min = std::numeric_limits<double>::infinity();
  tiny_inf.output = work / "run_tiny_inf";
  tiny_inf.cache_dir = tiny.output / "cache";
  tiny_inf.replay_only = true;
  runs.push_back(run_case("tiny_company tau=inf (replay)", tiny_inf));
  if (!user_db.empty()) {
    RunConfig user;
    user.databases = {user_db};
    user.workload = user_workload;
    user.seed = 7;
    user.output = work / "run_user";
    runs.push_back(run_case("user " + user_db.filename().string(), user));
  }
  const Run& tiny_run = runs[0];
  const Run& retail_run = runs[1];
  const Run& inf_run = runs[2];

  std::vector<std::pair<std::string, std::function<Verdict()>>> criteria;

  criteria.emplace_back("equivalence check finds 0 discrepancies for the committed plan", [&] {
    Verdict v{true, {}};
    for (const auto& r : runs) {
      if (r.result.exit_code != 0) {
        v.pass = false;
        v.detail += r.name + ": run failed (" + r.result.error + "); ";
        continue;
      }
      for (const auto& db : r.config.databases) {
        const auto schema = load_schema(db);
        const auto items = workload_for(r.config, db, schema);
        const auto loaded = load_view_layer(r.config.output / schema.db_id() / "views.sqlite", schema);
        const auto t0 = Clock::now();
        const auto eq = equivalence_check(loaded.layer, items, schema, db, 4);
        const double secs = seconds_since(t0);
        const bool fixture = r.name == "tiny_company" || r.name == "retail";
        const bool ok = eq.ok() && eq.checked == items.size() && !items.empty() && (!fixture || secs < 10.0) &&
                        r.database(schema.db_id())->equivalence_discrepancies == 0;
        v.pass = v.pass && ok;
        v.detail += r.name + " " + std::to_string(eq.discrepancies.size()) + "/" + std::to_string(eq.checked) +
                    " in " + fmt("%.3f s", secs) + "; ";
      }
    }
    return v;
  });

  criteria.emplace_back("base database hash unchanged by every end-to-end run", [&] {
    Verdict v{true, {}};
    std::size_t checked = 0;
    for (const auto& r : runs)
      for (const auto& [db, h] : r.hashes) {
        ++checked;
        if (h.first != h.second || h.first.empty()) {
          v.pass = false;
          v.detail += r.name + " changed " + db.filename().string() + "; ";
        }
      }
    v.detail += std::to_string(checked) + " database files checked";
    return v;
  });

  criteria.emplace_back("retention and commitment cases from synthetic score records", [&] {
    auto records = [](std::size_t base_correct, std::size_t cand_correct, std::size_t q) {
      std::vector<ScoreRecord> out;
      for (auto [rank, correct] : {std::pair<std::size_t, std::size_t>{0, base_correct}, {1, cand_correct}}) {
        ScoreRecord r{ColumnId{0, 0}, "t.c", rank ? "candidate" : "original", rank, "m", {}};
        for (std::size_t i = 0; i < q; ++i) r.outcomes.push_back({i, i < correct, "", ExecErrorKind::None, ""});
        out.push_back(std::move(r));
      }
      return out;
    };
    const auto retained = decide_from_records({0, 0}, "t.c", "original", records(236, 243, 250), 0.05);
    const auto committed = decide_from_records({0, 0}, "t.c", "original", records(0, 3, 3), 0.05);
    const auto s = aggregate_scores(records(236, 243, 250));
    Verdict v;
    v.pass = std::abs(s[0].mean - 0.944) < 1e-12 && std::abs(s[1].mean - 0.972) < 1e-12 &&
             retained.status == DecisionStatus::Retained && retained.selected == "original" &&
             std::abs(*retained.delta - 0.028) < 1e-12 && committed.status == DecisionStatus::Committed &&
             committed.selected == "candidate" && *committed.delta == 1.0;
    v.detail = std::string("0.944->0.972 ") + to_string(retained.status) + fmt(" (delta %+.3f)", *retained.delta) +
               "; 0.000->1.000 " + to_string(committed.status) + fmt(" (delta %+.3f)", *committed.delta);
    return v;
  });

  criteria.emplace_back("every committed column scores at least its original on Q(c)", [&] {
    Verdict v{true, {}};
    std::size_t checked = 0, violations = 0;
    for (const auto& r : runs) {
      if (r.result.exit_code != 0) continue;
      for (const auto& d : r.result.report.databases) {
        const auto means = log_means(r.config.output / d.db_id / "scores.jsonl");
        for (const auto& x : d.decisions) {
          if (x.status != DecisionStatus::Committed) continue;
          ++checked;
          const auto& m = means.at(x.column);
          if (m.at(x.selected) < m.at(x.original)) ++violations;
        }
      }
    }
    v.pass = violations == 0 && checked > 0;
    v.detail = std::to_string(checked) + " committed decisions, " + std::to_string(violations) + " violations";
    return v;
  });

  criteria.emplace_back("recovery-rate arithmetic", [&] {
    const auto table = recovery_rate(73.43, 70.87, 72.77);
    const auto full = recovery_rate(0.9, 0.4, 0.9);
    const auto* d = tiny_run.database("tiny_company");
    const auto tiny_rate = d ? d->recovery_rate : std::nullopt;
    Verdict v;
    v.pass = table && std::abs(*table - 134.7) <= 0.1 && full && *full == 100.0 && tiny_rate && *tiny_rate == 100.0;
    v.detail = "(73.43, 70.87, 72.77) -> " + (table ? fmt("%.2f%%", *table) : "-") + "; refined=clean -> " +
               (full ? fmt("%.1f%%", *full) : "-") + "; tiny run -> " + (tiny_rate ? fmt("%.1f%%", *tiny_rate) : "-");
    return v;
  });

  criteria.emplace_back("tiny_company refined mock ExAcc beats degraded and equals the hand-traced 6/6", [&] {
    const auto* d = tiny_run.database("tiny_company");
    Verdict v;
    if (!d || !d->before || !d->after) return Verdict{false, "tiny run produced no accuracy: " + tiny_run.result.error};
    // Hand trace: on the refined names every question's tokens meet the
    // right column, so all six answers match; degraded, only the count and
    // the dept_id lookup do.
    v.pass = d->after->quality == 6.0 / 6.0 && d->before->quality == 2.0 / 6.0 &&
             d->after->quality > d->before->quality && tiny_run.seconds < 30.0;
    v.detail = fmt("degraded %.4f", d->before->quality) + fmt(" -> refined %.4f", d->after->quality) +
               fmt(" in %.2f s", tiny_run.seconds);
    return v;
  });

  criteria.emplace_back("200 random decision sets resolve admissibly within 2 passes, consistent with brute force", [&] {
    std::mt19937_64 rng(7);
    std::size_t bad = 0, reverted = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const auto s = random_schema(rng);
      const auto check = check_resolution(s, random_decisions(s, rng));
      bad += !check.ok();
      reverted += check.reverted;
    }
    return Verdict{bad == 0, std::to_string(bad) + " violations (" + std::to_string(200 - reverted) +
                                 " fully placed, " + std::to_string(reverted) + " with reverts)"};
  });

  criteria.emplace_back("logged inference count equals the predicted count; |A|=665, k=3, |M|=2, |Q|=10 gives ~4e4", [&] {
    Verdict v{true, {}};
    for (const auto& r : runs) {
      if (r.result.exit_code != 0) continue;
      for (std::size_t i = 0; i < r.config.databases.size(); ++i) {
        const auto& db = r.config.databases[i];
        const auto schema = load_schema(db);
        const auto* d = r.database(schema.db_id());
        const ColumnQueryIndex index(workload_for(r.config, db, schema), schema);
        std::ifstream in(r.config.output / schema.db_id() / "candidates.json");
        std::size_t predicted = 0;
        for (const auto& c : json::parse(in)) {
          const auto qn = c.at("column").get<std::string>();
          const auto dot = qn.find('.');
          const auto id = schema.find_column(qn.substr(0, dot), qn.substr(dot + 1));
          predicted += (1 + c.at("candidates").size()) * r.config.verifiers.size() * index.count(*id);
        }
        std::ifstream log(r.config.output / schema.db_id() / "scores.jsonl");
        std::size_t lines = 0;
        for (std::string line; std::getline(log, line);) lines += !line.empty();
        const bool ok = lines == predicted && d->predicted_inferences == predicted &&
                        d->invoked_inferences == predicted && (r.name != "tiny_company" || predicted == 26);
        v.pass = v.pass && ok;
        v.detail += r.name + " " + std::to_string(lines) + "/" + std::to_string(predicted) + "; ";
      }
    }
    const double estimate = estimated_inference_count(665, 3, 2, 10);
    v.pass = v.pass && std::floor(std::log10(estimate)) == 4 && std::abs(estimate - 4e4) <= 0.5e4;
    v.detail += fmt("estimate %.0f", estimate);
    return v;
  });

  criteria.emplace_back("committed count nonincreasing in tau; tau=inf commits nothing and keeps ExAcc", [&] {
    const std::vector<double> taus{0.0, 0.01, 0.05, 0.1, 0.2, 0.34, 0.5, 0.67, 1.0, 1.1,
                                   std::numeric_limits<double>::infinity()};
    const auto rows = sweep_tau(tiny, taus);
    Verdict v{true, "committed"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].committed > rows[i - 1].committed) v.pass = false;
      v.detail += " " + std::to_string(rows[i].committed);
    }
    const auto* d = tiny_run.database("tiny_company");
    const auto* inf = inf_run.database("tiny_company");
    const auto& last = rows.back();
    v.pass = v.pass && d && inf && last.committed == 0 && last.cache_misses == 0 && last.exacc &&
             *last.exacc == d->before->quality && inf_run.result.exit_code == 0 && inf->funnel.n_r == 0 &&
             inf->after->quality == inf->before->quality && inf->before->quality == d->before->quality &&
             inf_run.result.backend_calls == 0;
    if (last.exacc) v.detail += fmt("; tau=inf ExAcc %.4f", *last.exacc);
    if (d && d->before) v.detail += fmt(" vs degraded %.4f", d->before->quality);
    v.detail += "; replay run backend calls " + std::to_string(inf_run.result.backend_calls);
    return v;
  });

  criteria.emplace_back("renamed PK and both referencing FKs share one name; JOIN matches the base", [&] {
    if (retail_run.result.exit_code != 0) return Verdict{false, "retail run failed: " + retail_run.result.error};
    const auto schema = load_schema(retail_db);
    const auto loaded = load_view_layer(retail.output / "retail" / "views.sqlite", schema);
    const auto& m = loaded.layer.mapping;
    const auto& pk = m.name_of(schema, *schema.find_column("customer", "cid"));
    const auto& fk1 = m.name_of(schema, *schema.find_column("orders", "cid"));
    const auto& fk2 = m.name_of(schema, *schema.find_column("payment", "cid"));
    const std::string join =
        "SELECT c.cust_nm, o.ord_id, o.tot, p.pay_id, p.amt FROM orders o JOIN payment p ON o.cid = p.cid "
        "JOIN customer c ON c.cid = p.cid";
    const std::string rewritten = sql::rewrite_identifiers(join, m, schema);
    const auto base = execute(ExecutableSchema::base(retail_db), join);
    const auto views = execute(ExecutableSchema{retail_db, std::make_shared<const ViewLayer>(loaded.layer)}, rewritten);
    Verdict v;
    v.pass = pk != "cid" && pk == fk1 && pk == fk2 && base.ok() && views.ok() && !base.result->rows.empty() &&
             results_equal(*base.result, *views.result);
    v.detail = "customer.cid, orders.cid, payment.cid -> " + pk + ", " + fk1 + ", " + fk2 + "; JOIN rows " +
               (base.ok() ? std::to_string(base.result->rows.size()) : "error") + " vs " +
               (views.ok() ? std::to_string(views.result->rows.size()) : views.message);
    return v;
  });

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s criterion %zu: %s (%s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
