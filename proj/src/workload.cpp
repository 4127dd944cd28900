#include "schemaref/workload.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "schemaref/error.hpp"
#include "schemaref/log.hpp"
#include "schemaref/parallel.hpp"
#include "schemaref/sql_refs.hpp"

namespace schemaref {

using nlohmann::json;

namespace {

struct RawRecord {
  std::size_t line;
  std::string question, gold_sql, db_id;
  std::string parse_error;
};

std::string field(const json& rec, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (rec.contains(n) && rec[n].is_string()) return rec[n].get<std::string>();
  return {};
}

RawRecord to_record(const json& rec, std::size_t line) {
  RawRecord r{line, {}, {}, {}, {}};
  if (!rec.is_object()) {
    r.parse_error = "record is not an object";
    return r;
  }
  r.question = field(rec, {"question"});
  r.gold_sql = field(rec, {"gold_sql", "query", "SQL", "sql"});
  r.db_id = field(rec, {"db_id"});
  if (r.question.empty() || r.gold_sql.empty()) r.parse_error = "missing question or gold SQL";
  return r;
}

std::vector<RawRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read workload " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<RawRecord> out;

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    auto arr = json::parse(text, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) throw Error("malformed JSON array in " + path.string());
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(to_record(arr[i], i + 1));
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto rec = json::parse(line, nullptr, false);
    if (rec.is_discarded()) {
      out.push_back({n, {}, {}, {}, "malformed JSON"});
      continue;
    }
    out.push_back(to_record(rec, n));
  }
  return out;
}

}  // namespace

IngestReport ingest_workload(const std::filesystem::path& workload_path, const SchemaModel& schema,
                             const std::filesystem::path& db_path, const IngestOptions& options) {
  IngestReport report;
  auto records = read_records(workload_path);
  if (records.empty()) {
    report.warnings.push_back("workload is empty: " + workload_path.string());
    log::warn(report.warnings.back());
    return report;
  }
  Session session(ExecutableSchema::base(db_path));
  std::size_t considered = 0;
  for (auto& r : records) {
    if (r.parse_error.empty() && !r.db_id.empty() && r.db_id != schema.db_id()) {
      ++report.other_database;
      continue;
    }
    ++considered;
    std::string reason = r.parse_error;
    std::shared_ptr<const ResultSet> gold;
    if (reason.empty()) {
      auto res = session.execute(r.gold_sql, options.timeout);
      if (!res.ok()) reason = std::string("gold SQL failed (") + to_string(res.error) + "): " + res.message;
      else if (res.result->truncated) reason = "gold result exceeds the row cap";
      else gold = std::make_shared<const ResultSet>(std::move(*res.result));
    }
    if (!reason.empty()) {
      if (options.hard_fail) throw Error("workload line " + std::to_string(r.line) + ": " + reason);
      log::warn("dropping workload line " + std::to_string(r.line) + ": " + reason);
      report.dropped.push_back({r.line, std::move(reason)});
      continue;
    }
    WorkloadItem item;
    item.index = report.items.size();
    item.question = std::move(r.question);
    item.gold_sql = std::move(r.gold_sql);
    item.db_id = r.db_id.empty() ? schema.db_id() : r.db_id;
    item.gold = std::move(gold);
    report.items.push_back(std::move(item));
  }
  if (considered > 0 &&
      static_cast<double>(report.dropped.size()) > options.max_failure_fraction * static_cast<double>(considered))
    throw Error(std::to_string(report.dropped.size()) + " of " + std::to_string(considered) +
                " workload items failed validation; workload and database probably do not match");
  if (report.items.empty()) report.warnings.push_back("no workload items for database " + schema.db_id());
  return report;
}

ColumnQueryIndex::ColumnQueryIndex(const std::vector<WorkloadItem>& items, const SchemaModel& schema) : items_(items) {
  per_item_.resize(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::set<ColumnId> cols;
    try {
      cols = sql::extract_columns(items[i].gold_sql, schema);
    } catch (const Error& e) {
      log::warn("cannot tokenize gold SQL of item " + std::to_string(items[i].index) + ": " + e.what());
    }
    per_item_[i].assign(cols.begin(), cols.end());
    for (ColumnId c : cols) index_[c].push_back(i);
  }
}

std::vector<WorkloadItem> ColumnQueryIndex::items_for(ColumnId column) const {
  std::vector<WorkloadItem> out;
  if (auto it = index_.find(column); it != index_.end())
    for (auto i : it->second) out.push_back(items_[i]);
  return out;
}

std::size_t ColumnQueryIndex::count(ColumnId column) const {
  auto it = index_.find(column);
  return it == index_.end() ? 0 : it->second.size();
}

bool prediction_matches(const ResultSet& predicted, const ResultSet& gold) {
  ResultSet p = predicted;
  p.ordered = gold.ordered;
  return results_equal(p, gold);
}

ExAccResult exacc(Text2SqlBackend& model, const EvalContext& ctx, const std::vector<WorkloadItem>& items) {
  if (items.empty()) throw Error("exacc over an empty item list");
  ExAccResult out;
  out.outcomes.resize(items.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(ctx.parallelism, items.size()));
  std::vector<std::unique_ptr<Session>> sessions(workers);

  parallel_for(items.size(), workers, [&](std::size_t i, std::size_t w) {
    const auto& item = items[i];
    ItemOutcome& o = out.outcomes[i];
    o.item_index = item.index;
    auto resp = model.infer(make_request(item.question, ctx.visible, ctx.data, ctx.samples_per_table));
    o.predicted_sql = resp.predicted_sql;
    if (resp.failed) {
      o.message = "backend failure: " + resp.error;
      return;
    }
    if (!sessions[w]) {
      try {
        sessions[w] = std::make_unique<Session>(ctx.target);
      } catch (const Error& e) {
        o.error = ExecErrorKind::Runtime;
        o.message = e.what();
        return;
      }
    }
    auto res = sessions[w]->execute(resp.predicted_sql, ctx.timeout);
    o.error = res.error;
    o.message = res.message;
    o.correct = res.ok() && item.gold && prediction_matches(*res.result, *item.gold);
  });

  const auto correct = std::count_if(out.outcomes.begin(), out.outcomes.end(), [](const auto& o) { return o.correct; });
  out.value = static_cast<double>(correct) / static_cast<double>(items.size());
  return out;
}

QualityReport quality(const std::vector<std::shared_ptr<Text2SqlBackend>>& models, const EvalContext& ctx,
                      const std::vector<WorkloadItem>& items) {
  if (models.empty()) throw Error("quality needs at least one model");
  QualityReport report;
  double sum = 0;
  for (const auto& m : models) {
    const double v = exacc(*m, ctx, items).value;
    report.per_model.emplace_back(m->id(), v);
    sum += v;
  }
  report.quality = sum / static_cast<double>(models.size());
  return report;
}

std::optional<double> recovery_rate(double refined, double degraded, double clean) {
  if (clean == degraded) return std::nullopt;
  return (refined - degraded) / (clean - degraded) * 100.0;
}

}  // namespace schemaref
