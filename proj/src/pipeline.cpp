#include "schemaref/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "schemaref/conflict.hpp"
#include "schemaref/error.hpp"
#include "schemaref/hashing.hpp"
#include "schemaref/identifier.hpp"
#include "schemaref/log.hpp"
#include "schemaref/synthesis.hpp"
#include "schemaref/verifier.hpp"
#include "schemaref/workload.hpp"

namespace schemaref {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

fs::path resolve_path(const std::string& v, const fs::path& base) {
  fs::path p(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

std::size_t to_count(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw Error("config: " + key + " expects a non-negative integer, got '" + v + "'");
  }
}

double to_number(const std::string& key, const std::string& v) {
  const auto lower = to_lower(v);
  if (lower == "inf" || lower == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error("config: " + key + " expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto lower = to_lower(v);
  if (lower == "true" || lower == "1" || lower == "yes") return true;
  if (lower == "false" || lower == "0" || lower == "no") return false;
  throw Error("config: " + key + " expects true or false, got '" + v + "'");
}

void set_key(RunConfig& c, const std::string& key, const std::string& value, const fs::path& base, bool append) {
  if (key == "database" || key == "clean_database") {
    auto& list = key == "database" ? c.databases : c.clean_databases;
    if (!append) list.clear();
    for (const auto& v : split_list(value)) list.push_back(resolve_path(v, base));
  } else if (key == "workload") {
    c.workload = resolve_path(value, base);
  } else if (key == "clean_workload") {
    c.clean_workload = resolve_path(value, base);
  } else if (key == "domain") {
    c.domain = value;
  } else if (key == "verifiers") {
    c.verifiers = split_list(value);
  } else if (key == "screener") {
    c.screener = value;
  } else if (key == "generator") {
    c.generator = value;
  } else if (key == "dictionary") {
    c.dictionary = resolve_path(value, base);
  } else if (key == "k") {
    c.k = to_count(key, value);
  } else if (key == "n_s") {
    c.n_s = to_count(key, value);
  } else if (key == "samples_per_table") {
    c.samples_per_table = to_count(key, value);
  } else if (key == "tau_min") {
    c.tau_min = to_number(key, value);
  } else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(to_count(key, value));
  } else if (key == "output") {
    c.output = resolve_path(value, base);
  } else if (key == "parallelism") {
    c.parallelism = to_count(key, value);
  } else if (key == "cache_dir") {
    c.cache_dir = resolve_path(value, base);
  } else if (key == "replay_only") {
    c.replay_only = to_bool(key, value);
  } else if (key == "timeout_ms") {
    c.timeout = std::chrono::milliseconds(to_count(key, value));
  } else if (key.rfind("backend.", 0) == 0) {
    const auto dot = key.find('.', 8);
    if (dot == std::string::npos) throw Error("config: expected backend.<id>.<field>, got '" + key + "'");
    const std::string id = key.substr(8, dot - 8), field = key.substr(dot + 1);
    auto& b = c.backends[id];
    b.id = id;
    if (field == "kind") b.kind = value;
    else if (field == "base_url") b.endpoint.base_url = value;
    else if (field == "model") b.endpoint.model = value;
    else if (field == "api_key_env") b.endpoint.api_key_env = value;
    else if (field == "timeout_ms") b.endpoint.timeout = std::chrono::milliseconds(to_count(key, value));
    else if (field == "max_retries") b.endpoint.max_retries = static_cast<int>(to_count(key, value));
    else if (field == "max_in_flight") b.max_in_flight = static_cast<int>(to_count(key, value));
    else if (field == "temperature") b.endpoint.temperature = to_number(key, value);
    else throw Error("config: unknown backend field '" + field + "'");
  } else {
    throw Error("config: unknown key '" + key + "'");
  }
}

std::pair<std::string, std::string> split_assignment(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw Error("config: expected key = value, got '" + line + "'");
  return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

}  // namespace

fs::path RunConfig::cache_file() const { return (cache_dir.empty() ? output / "cache" : cache_dir) / "responses.jsonl"; }

void RunConfig::validate() const {
  if (databases.empty()) throw Error("config: no database given");
  for (const auto& d : databases)
    if (!fs::exists(d)) throw Error("config: database not found: " + d.string());
  if (workload.empty()) throw Error("config: no workload given");
  if (!fs::exists(workload)) throw Error("config: workload not found: " + workload.string());
  if (!clean_databases.empty() && clean_databases.size() != databases.size())
    throw Error("config: clean_database must list one file per database");
  if (!clean_databases.empty() && clean_workload.empty()) throw Error("config: clean_database needs clean_workload");
  if (verifiers.empty()) throw Error("config: verifiers must name at least one backend");
  for (const auto& v : verifiers)
    if (!backends.count(v) && v.rfind("mock", 0) != 0) throw Error("config: verifier '" + v + "' is not defined");
  if (screener != "rules" && !backends.count(screener)) throw Error("config: screener '" + screener + "' is not defined");
  if (generator != "dictionary" && !backends.count(generator))
    throw Error("config: generator '" + generator + "' is not defined");
  for (const auto& [id, b] : backends) {
    if (b.kind != "mock" && b.kind != "llm") throw Error("config: backend " + id + " has unknown kind " + b.kind);
    if (b.kind == "llm" && (b.endpoint.base_url.empty() || b.endpoint.model.empty()))
      throw Error("config: backend " + id + " needs base_url and model");
  }
  if (k < 1) throw Error("config: k must be at least 1");
  if (std::isnan(tau_min) || tau_min < 0) throw Error("config: tau_min must be non-negative");
  if (!seed) throw Error("config: seed is required");
  if (output.empty()) throw Error("config: no output directory given");
  if (parallelism < 1) throw Error("config: parallelism must be at least 1");
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  for (const auto& d : databases) o << "database = " << d.string() << "\n";
  o << "workload = " << workload.string() << "\n";
  for (const auto& d : clean_databases) o << "clean_database = " << d.string() << "\n";
  if (!clean_workload.empty()) o << "clean_workload = " << clean_workload.string() << "\n";
  if (!domain.empty()) o << "domain = " << domain << "\n";
  o << "verifiers = ";
  for (std::size_t i = 0; i < verifiers.size(); ++i) o << (i ? ", " : "") << verifiers[i];
  o << "\nscreener = " << screener << "\ngenerator = " << generator << "\n";
  if (!dictionary.empty()) o << "dictionary = " << dictionary.string() << "\n";
  o << "k = " << k << "\nn_s = " << n_s << "\nsamples_per_table = " << samples_per_table << "\n";
  o << "tau_min = " << (std::isinf(tau_min) ? std::string("inf") : json(tau_min).dump()) << "\n";
  if (seed) o << "seed = " << *seed << "\n";
  o << "output = " << output.string() << "\nparallelism = " << parallelism << "\n";
  if (!cache_dir.empty()) o << "cache_dir = " << cache_dir.string() << "\n";
  o << "replay_only = " << (replay_only ? "true" : "false") << "\ntimeout_ms = " << timeout.count() << "\n";
  for (const auto& [id, b] : backends) {
    const std::string p = "backend." + id + ".";
    o << p << "kind = " << b.kind << "\n";
    if (b.kind != "llm") continue;
    o << p << "base_url = " << b.endpoint.base_url << "\n" << p << "model = " << b.endpoint.model << "\n";
    if (!b.endpoint.api_key_env.empty()) o << p << "api_key_env = " << b.endpoint.api_key_env << "\n";
    o << p << "timeout_ms = " << b.endpoint.timeout.count() << "\n"
      << p << "max_retries = " << b.endpoint.max_retries << "\n"
      << p << "max_in_flight = " << b.max_in_flight << "\n";
  }
  return o.str();
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      auto [k, v] = split_assignment(t);
      set_key(c, k, v, base_dir, true);
    } catch (const Error& e) {
      throw Error("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot read config " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), fs::absolute(file).parent_path());
  } catch (const Error& e) {
    throw Error(file.string() + ": " + e.what());
  }
}

void apply_override(RunConfig& config, const std::string& assignment, const fs::path& base_dir) {
  auto [k, v] = split_assignment(assignment);
  set_key(config, k, v, base_dir, false);
}

std::vector<std::shared_ptr<CachingBackend>> make_verifiers(const RunConfig& config,
                                                            std::shared_ptr<ResponseCache> cache, bool replay_only) {
  std::vector<std::shared_ptr<CachingBackend>> out;
  for (const auto& id : config.verifiers) {
    std::shared_ptr<Text2SqlBackend> inner;
    auto it = config.backends.find(id);
    if (it != config.backends.end() && it->second.kind == "llm")
      inner = std::make_shared<LlmBackend>(id, it->second.endpoint, it->second.max_in_flight);
    else
      inner = std::make_shared<MockBackend>(id);
    out.push_back(std::make_shared<CachingBackend>(inner, cache, replay_only));
  }
  return out;
}

std::unique_ptr<Screener> make_screener(const RunConfig& config) {
  if (config.screener == "rules") return std::make_unique<RuleScreener>();
  const auto& b = config.backends.at(config.screener);
  return std::make_unique<LlmScreener>(b.id, b.endpoint);
}

std::unique_ptr<Generator> make_generator(const RunConfig& config) {
  if (config.generator == "dictionary")
    return std::make_unique<DictionaryGenerator>(config.dictionary.empty() ? DictionaryGenerator()
                                                                          : DictionaryGenerator::from_file(config.dictionary));
  const auto& b = config.backends.at(config.generator);
  return std::make_unique<LlmGenerator>(b.id, b.endpoint);
}

namespace {

std::string domain_for(const RunConfig& config, const fs::path& db) {
  for (const auto& candidate : {db.parent_path() / (db.stem().string() + ".domain.txt"), db.parent_path() / "domain.txt"}) {
    std::ifstream in(candidate);
    if (!in) continue;
    std::stringstream buf;
    buf << in.rdbuf();
    return trim(buf.str());
  }
  return config.domain;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw Error("cannot write " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream o;
  o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return o.str();
}

std::size_t invocations(const std::vector<std::shared_ptr<CachingBackend>>& models) {
  std::size_t n = 0;
  for (const auto& m : models) n += m->hits() + m->misses();
  return n;
}

std::size_t uncached_calls(const std::vector<std::shared_ptr<CachingBackend>>& models) {
  std::size_t n = 0;
  for (const auto& m : models) n += m->inner_calls();
  return n;
}

std::vector<std::shared_ptr<Text2SqlBackend>> as_backends(const std::vector<std::shared_ptr<CachingBackend>>& models) {
  return {models.begin(), models.end()};
}

json screening_json(const SchemaModel& schema, const ScreeningResult& s) {
  json ex = json::array(), verdicts = json::array();
  for (const auto& e : s.excluded)
    ex.push_back({{"column", e.qualified_name}, {"table_index", e.column.table}, {"column_index", e.column.column},
                  {"reason", e.reason}});
  for (const auto& v : s.verdicts)
    verdicts.push_back({{"column", v.qualified_name},
                        {"table_index", v.column.table},
                        {"column_index", v.column.column},
                        {"flagged", v.flagged},
                        {"reason", v.reason},
                        {"source", v.source}});
  return {{"db_id", schema.db_id()}, {"excluded", std::move(ex)}, {"verdicts", std::move(verdicts)}};
}

struct Evaluation {
  QualityReport quality;
  std::vector<ExAccResult> per_model;
};

Evaluation evaluate(const std::vector<std::shared_ptr<CachingBackend>>& models, const EvalContext& ctx,
                    const std::vector<WorkloadItem>& items) {
  Evaluation ev;
  double sum = 0;
  for (const auto& m : models) {
    ev.per_model.push_back(exacc(*m, ctx, items));
    ev.quality.per_model.emplace_back(m->id(), ev.per_model.back().value);
    sum += ev.per_model.back().value;
  }
  ev.quality.quality = sum / static_cast<double>(models.size());
  return ev;
}

class Tracer {
public:
  explicit Tracer(PipelineResult& result) : result_(result) {}
  void enter(const std::string& db, const std::string& phase, const std::string& detail = {}) {
    result_.trace.push_back({db, phase, "enter", detail});
  }
  void exit(const std::string& db, const std::string& phase, const std::string& detail = {}) {
    result_.trace.push_back({db, phase, "exit", detail});
    result_.last_good_phase = db.empty() ? phase : db + ":" + phase;
  }

private:
  PipelineResult& result_;
};

DatabaseReport refine_database(const RunConfig& config, const fs::path& db_path, std::size_t db_index,
                               Screener& screener, Generator& generator,
                               const std::vector<std::shared_ptr<CachingBackend>>& models, Tracer& trace) {
  DatabaseReport rep;
  std::string db = db_path.stem().string();

  trace.enter(db, "load");
  const std::string base_hash = sha256_file(db_path);
  const SchemaModel schema = load_schema(db_path, domain_for(config, db_path));
  db = schema.db_id();
  rep.db_id = db;
  const fs::path dir = config.output / db;
  fs::create_directories(dir);
  DataSource data(db_path, schema);
  IngestOptions ingest_opts;
  ingest_opts.timeout = config.timeout;
  auto ingest = ingest_workload(config.workload, schema, db_path, ingest_opts);
  const auto& items = ingest.items;
  ColumnQueryIndex index(items, schema);
  trace.exit(db, "load", std::to_string(items.size()) + " workload items");

  trace.enter(db, "screen");
  auto screening = screen(schema, screener, data, config.parallelism);
  write_json(dir / "screening.json", screening_json(schema, screening));
  trace.exit(db, "screen", std::to_string(screening.flagged().size()) + " flagged");

  trace.enter(db, "structural_exclude");
  for (const auto& v : screening.verdicts)
    for (const auto& e : screening.excluded)
      if (v.column == e.column) throw Error("screening produced a verdict for excluded column " + e.qualified_name);
  const auto candidates_a = screening.flagged();
  trace.exit(db, "structural_exclude", std::to_string(screening.excluded.size()) + " excluded");

  ScoreLog scores(dir / "scores.jsonl");
  VerifierConfig vcfg;
  vcfg.tau_min = config.tau_min;
  vcfg.parallelism = config.parallelism;
  vcfg.samples_per_table = config.samples_per_table;
  vcfg.timeout = config.timeout;
  json candidates_json = json::array();
  std::vector<std::size_t> cand_sizes, q_sizes;
  const std::size_t invoked_before = invocations(models);
  for (ColumnId c : candidates_a) {
    const std::string qn = schema.qualified_name(c);
    trace.enter(db, "generate", qn);
    auto ctx = build_context(schema, c, data, *config.seed, config.n_s);
    auto cands = generate(schema, ctx, generator, config.k);
    candidates_json.push_back({{"column", qn},
                               {"original", cands.original},
                               {"generator", cands.generator},
                               {"candidates", cands.candidates},
                               {"context", json::parse(ctx.serialize())}});
    trace.exit(db, "generate", qn);

    trace.enter(db, "verify", qn);
    const auto q = index.items_for(c);
    auto ver = verify_column(schema, cands, q, as_backends(models), db_path, &data, vcfg);
    scores.append(db, ver.records);
    cand_sizes.push_back(cands.augmented().size());
    q_sizes.push_back(q.size());
    rep.decisions.push_back(std::move(ver.decision));
    trace.exit(db, "verify", qn);
  }
  write_json(dir / "candidates.json", candidates_json);
  json decisions_json = json::array();
  for (const auto& d : rep.decisions) decisions_json.push_back(to_json(d));
  write_json(dir / "decisions.json", decisions_json);
  rep.predicted_inferences = predicted_inference_count(cand_sizes, models.size(), q_sizes);
  rep.logged_inferences = scores.line_count();
  rep.invoked_inferences = invocations(models) - invoked_before;
  if (rep.invoked_inferences != rep.predicted_inferences || rep.logged_inferences != rep.predicted_inferences)
    log::warn(db + ": inference count " + std::to_string(rep.invoked_inferences) + " differs from the predicted " +
              std::to_string(rep.predicted_inferences));

  trace.enter(db, "commit_filter");
  std::size_t committed = 0;
  for (const auto& d : rep.decisions) committed += d.status == DecisionStatus::Committed;
  trace.exit(db, "commit_filter", std::to_string(committed) + " committed");

  trace.enter(db, "conflict_resolve");
  auto plan = resolve(rep.decisions, schema);
  trace.exit(db, "conflict_resolve", std::to_string(plan.iterations) + " iterations");

  trace.enter(db, "propagate_pk");
  plan = propagate_pk_renames(plan, schema);
  write_json(dir / "plan.json", to_json(plan));
  trace.exit(db, "propagate_pk");

  trace.enter(db, "synthesize");
  auto layer = synthesize_views(plan, schema, db_path, dir / "views.sqlite");
  write_views_sql(layer, db_path, dir / "views.sql");
  write_mapping_json(plan, schema, dir / "mapping.json");
  trace.exit(db, "synthesize", std::to_string(layer.views.size()) + " views");

  trace.enter(db, "equivalence_check");
  auto eq = equivalence_check(layer, items, schema, db_path, config.parallelism, config.timeout);
  json disc = json::array();
  for (const auto& d : eq.discrepancies)
    disc.push_back({{"item", d.item}, {"gold_sql", d.gold_sql}, {"rewritten_sql", d.rewritten_sql}, {"reason", d.reason}});
  write_json(dir / "equivalence.json", {{"checked", eq.checked}, {"discrepancies", std::move(disc)}});
  rep.equivalence_checked = eq.checked;
  rep.equivalence_discrepancies = eq.discrepancies.size();
  trace.exit(db, "equivalence_check", std::to_string(eq.discrepancies.size()) + " discrepancies");

  trace.enter(db, "evaluate");
  std::optional<double> delta;
  if (!items.empty()) {
    EvalContext before_ctx{ExecutableSchema::base(db_path), schema, &data, config.samples_per_table, config.timeout,
                           config.parallelism};
    auto before = evaluate(models, before_ctx, items);
    auto shared = std::make_shared<const ViewLayer>(layer);
    EvalContext after_ctx{ExecutableSchema{db_path, shared}, apply_mapping(schema, layer.mapping), &data,
                          config.samples_per_table, config.timeout, config.parallelism};
    auto after = evaluate(models, after_ctx, items);
    rep.flips = flips(before.per_model.front().outcomes, after.per_model.front().outcomes);
    delta = after.quality.quality - before.quality.quality;
    rep.before = before.quality;
    rep.after = after.quality;
    if (!config.clean_databases.empty()) {
      const auto& clean_path = config.clean_databases.at(db_index);
      const SchemaModel clean_schema = load_schema(clean_path, schema.domain_description());
      DataSource clean_data(clean_path, clean_schema);
      auto clean_items = ingest_workload(config.clean_workload, clean_schema, clean_path, ingest_opts).items;
      if (!clean_items.empty()) {
        EvalContext clean_ctx{ExecutableSchema::base(clean_path), clean_schema, &clean_data, config.samples_per_table,
                              config.timeout, config.parallelism};
        rep.clean = evaluate(models, clean_ctx, clean_items).quality;
        rep.recovery_rate = recovery_rate(rep.after->quality, rep.before->quality, rep.clean->quality);
      }
    }
  }
  rep.plan = plan;
  rep.funnel = funnel(schema, screening, rep.decisions, plan);
  rep.coverage = coverage(db, rep.funnel.n_r, rep.funnel.m, delta);
  trace.exit(db, "evaluate");

  if (sha256_file(db_path) != base_hash) throw Error("base database " + db_path.string() + " changed during the run");
  return rep;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config) {
  PipelineResult result;
  Tracer trace(result);
  const std::string started = timestamp();
  std::vector<DatabaseReport> reports;
  std::vector<std::shared_ptr<CachingBackend>> models;

  auto finish = [&] {
    try {
      fs::create_directories(config.output);
      std::string text;
      for (const auto& e : result.trace)
        text += json{{"db_id", e.db_id}, {"phase", e.phase}, {"event", e.event}, {"detail", e.detail}}.dump() + "\n";
      write_text(config.output / "trace.jsonl", text);
      write_json(config.output / "status.json", {{"exit_code", result.exit_code},
                                                  {"error", result.error},
                                                  {"last_good_phase", result.last_good_phase},
                                                  {"backend_calls", result.backend_calls},
                                                  {"started", started},
                                                  {"finished", timestamp()}});
    } catch (const std::exception& e) {
      log::error(std::string("cannot record run status: ") + e.what());
    }
  };

  try {
    config.validate();
    fs::create_directories(config.output);
    write_text(config.output / "config.txt", config.to_text());
    auto cache = std::make_shared<ResponseCache>(config.cache_file());
    models = make_verifiers(config, cache, config.replay_only);
    auto screener = make_screener(config);
    auto generator = make_generator(config);

    for (std::size_t i = 0; i < config.databases.size(); ++i)
      reports.push_back(refine_database(config, config.databases[i], i, *screener, *generator, models, trace));

    trace.enter("", "report");
    result.report = aggregate(std::move(reports));
    const json j = to_json(result.report);
    write_json(config.output / "report.json", j);
    write_text(config.output / "report.txt", render_text(j));
    trace.exit("", "report");

    for (const auto& d : result.report.databases)
      if (d.equivalence_discrepancies > 0) result.exit_code = 2;
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.error = e.what();
    log::error(result.error);
  }
  result.backend_calls = uncached_calls(models);
  finish();
  return result;
}

std::vector<SweepRow> sweep_tau(const RunConfig& config, const std::vector<double>& taus) {
  config.validate();
  if (taus.empty()) throw Error("sweep-tau needs at least one tau value");
  for (double t : taus)
    if (std::isnan(t) || t < 0) throw Error("tau values must be non-negative");

  auto cache = std::make_shared<ResponseCache>(config.cache_file());
  auto models = make_verifiers(config, cache, true);
  std::vector<SweepRow> rows;
  std::map<double, SweepRow> totals;
  std::map<double, std::pair<double, std::size_t>> weighted;  // tau -> (sum of exacc*items, items)
  std::map<double, bool> total_defined;

  for (const auto& db_path : config.databases) {
    const SchemaModel schema = load_schema(db_path, domain_for(config, db_path));
    const fs::path dir = config.output / schema.db_id();
    const fs::path log_path = dir / "scores.jsonl", screening_path = dir / "screening.json";
    if (!fs::exists(log_path) || !fs::exists(screening_path))
      throw Error("no score log for " + schema.db_id() + " under " + config.output.string() +
                  "; run `refine` with this config first");

    std::map<ColumnId, std::vector<ScoreRecord>> by_column;
    for (auto& e : ScoreLog::read(log_path))
      if (e.db_id == schema.db_id()) by_column[e.record.column].push_back(std::move(e.record));

    std::ifstream in(screening_path);
    const json screening = json::parse(in);
    std::vector<ColumnId> flagged;
    for (const auto& v : screening.at("verdicts"))
      if (v.at("flagged").get<bool>())
        flagged.push_back({v.at("table_index").get<std::size_t>(), v.at("column_index").get<std::size_t>()});

    DataSource data(db_path, schema);
    IngestOptions opts;
    opts.timeout = config.timeout;
    const auto items = ingest_workload(config.workload, schema, db_path, opts).items;

    for (double tau : taus) {
      std::vector<RefinementDecision> decisions;
      SweepRow row;
      row.tau = tau;
      row.db_id = schema.db_id();
      for (ColumnId c : flagged) {
        if (!schema.contains(c)) throw Error("score log does not match the schema of " + schema.db_id());
        const auto& col = schema.column(c);
        auto it = by_column.find(c);
        decisions.push_back(decide_from_records(c, schema.qualified_name(c), col.name,
                                                it == by_column.end() ? std::vector<ScoreRecord>{} : it->second, tau));
        row.committed += decisions.back().status == DecisionStatus::Committed;
      }
      auto plan = propagate_pk_renames(resolve(decisions, schema), schema);
      std::size_t renamed = 0;
      for (const auto& e : plan.entries)
        renamed += e.final_name != e.original && e.provenance != Provenance::Propagated;
      row.renamed = renamed;

      if (!items.empty()) {
        auto layer = std::make_shared<ViewLayer>();
        layer->mapping = plan.mapping();
        layer->views = build_view_defs(schema, layer->mapping);
        EvalContext ctx{ExecutableSchema{db_path, layer}, apply_mapping(schema, layer->mapping), &data,
                        config.samples_per_table, config.timeout, config.parallelism};
        std::size_t misses_before = 0;
        for (const auto& m : models) misses_before += m->misses();
        double sum = 0;
        for (const auto& m : models) sum += exacc(*m, ctx, items).value;
        std::size_t misses_after = 0;
        for (const auto& m : models) misses_after += m->misses();
        row.cache_misses = misses_after - misses_before;
        if (row.cache_misses == 0) row.exacc = sum / static_cast<double>(models.size());
      }

      auto& total = totals[tau];
      total.tau = tau;
      total.committed += row.committed;
      total.renamed += row.renamed;
      total.cache_misses += row.cache_misses;
      if (!total_defined.count(tau)) total_defined[tau] = true;
      if (row.exacc) {
        weighted[tau].first += *row.exacc * static_cast<double>(items.size());
        weighted[tau].second += items.size();
      } else if (!items.empty()) {
        total_defined[tau] = false;
      }
      rows.push_back(std::move(row));
    }
  }
  if (config.databases.size() > 1)
    for (double tau : taus) {
      auto total = totals[tau];
      if (total_defined[tau] && weighted[tau].second > 0)
        total.exacc = weighted[tau].first / static_cast<double>(weighted[tau].second);
      rows.push_back(total);
    }
  return rows;
}

}  // namespace schemaref
