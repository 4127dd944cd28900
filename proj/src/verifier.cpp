#include "schemaref/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include <json.hpp>

#include "schemaref/error.hpp"
#include "schemaref/log.hpp"
#include "schemaref/parallel.hpp"

namespace schemaref {

using nlohmann::json;

double ScoreRecord::score() const {
  if (outcomes.empty()) return 0;
  const auto correct = std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.correct; });
  return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

const char* to_string(DecisionStatus status) {
  switch (status) {
    case DecisionStatus::Committed: return "committed";
    case DecisionStatus::Retained: return "retained";
    case DecisionStatus::Skipped: return "skipped";
  }
  return "?";
}

DecisionStatus decision_status_from_string(const std::string& s) {
  if (s == "committed") return DecisionStatus::Committed;
  if (s == "retained") return DecisionStatus::Retained;
  if (s == "skipped") return DecisionStatus::Skipped;
  throw Error("unknown decision status '" + s + "'");
}

RefinementDecision decide(ColumnId column, std::string qualified_name, const std::vector<CandidateScore>& scores,
                          double tau_min) {
  if (scores.empty()) throw Error("decide needs at least the original name");
  auto ranked = scores;
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  if (ranked.front().rank != 0) throw Error("score list lacks the original name");

  RefinementDecision d;
  d.column = column;
  d.qualified_name = std::move(qualified_name);
  d.original = ranked.front().name;
  d.scores = ranked;

  std::size_t best = 0;
  for (std::size_t i = 1; i < ranked.size(); ++i)
    if (ranked[i].mean > ranked[best].mean + kScoreEpsilon) best = i;
  const double base = ranked.front().mean;
  d.delta = ranked[best].mean - base;
  const bool commit = best != 0 && *d.delta >= tau_min - kScoreEpsilon;
  d.status = commit ? DecisionStatus::Committed : DecisionStatus::Retained;
  d.selected = commit ? ranked[best].name : d.original;

  for (std::size_t i = 1; i < ranked.size(); ++i)
    if (i != best && ranked[i].mean - base >= tau_min - kScoreEpsilon) d.runner_ups.push_back(ranked[i]);
  std::stable_sort(d.runner_ups.begin(), d.runner_ups.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.mean - b.mean) > kScoreEpsilon) return a.mean > b.mean;
    return a.rank < b.rank;
  });
  return d;
}

std::vector<CandidateScore> aggregate_scores(const std::vector<ScoreRecord>& records) {
  std::map<std::size_t, std::vector<const ScoreRecord*>> by_rank;
  std::set<std::string> models;
  for (const auto& r : records) {
    by_rank[r.rank].push_back(&r);
    models.insert(r.model);
  }
  std::vector<std::size_t> query_set;
  bool have_query_set = false;
  std::vector<CandidateScore> out;
  for (const auto& [rank, recs] : by_rank) {
    std::set<std::string> seen;
    double sum = 0;
    for (const auto* r : recs) {
      if (!seen.insert(r->model).second)
        throw Error("duplicate score record for " + r->qualified_name + " candidate " + r->candidate);
      std::vector<std::size_t> qs;
      for (const auto& o : r->outcomes) qs.push_back(o.query);
      std::sort(qs.begin(), qs.end());
      if (!have_query_set) {
        query_set = qs;
        have_query_set = true;
      } else if (qs != query_set) {
        throw Error("score records for " + r->qualified_name + " cover different query sets");
      }
      sum += r->score();
    }
    if (seen != models) throw Error("candidate " + recs.front()->candidate + " lacks scores for some models");
    out.push_back({recs.front()->candidate, rank, sum / static_cast<double>(recs.size())});
  }
  return out;
}

RefinementDecision decide_from_records(ColumnId column, std::string qualified_name, std::string original,
                                       const std::vector<ScoreRecord>& records, double tau_min) {
  if (records.empty()) {
    RefinementDecision d;
    d.column = column;
    d.qualified_name = std::move(qualified_name);
    d.original = original;
    d.selected = std::move(original);
    return d;
  }
  return decide(column, std::move(qualified_name), aggregate_scores(records), tau_min);
}

ColumnVerification verify_column(const SchemaModel& schema, const CandidateSet& candidates,
                                 const std::vector<WorkloadItem>& q_subset,
                                 const std::vector<std::shared_ptr<Text2SqlBackend>>& models,
                                 const std::filesystem::path& db_path, const DataSource* data,
                                 const VerifierConfig& config) {
  if (models.empty()) throw Error("verification needs at least one model");
  const ColumnId column = candidates.column;
  const std::string qualified = schema.qualified_name(column);
  ColumnVerification out;
  if (q_subset.empty()) {
    out.decision = decide_from_records(column, qualified, candidates.original, {}, config.tau_min);
    return out;
  }

  const auto names = candidates.augmented();
  const std::size_t nc = names.size(), nm = models.size(), nq = q_subset.size();

  std::vector<ExecutableSchema> targets;
  std::vector<std::string> build_errors(nc);
  std::vector<std::vector<Text2SqlRequest>> requests(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    auto layer = std::make_shared<ViewLayer>();
    layer->mapping.entries[column] = names[i];
    targets.push_back({db_path, nullptr});
    try {
      if (i > 0) (void)apply_rename(schema, column, names[i]);
      layer->views = build_view_defs(schema, layer->mapping);
      targets.back().view_layer = layer;
      Session probe(targets.back());
    } catch (const Error& e) {
      build_errors[i] = std::string("view construction failed: ") + e.what();
      log::warn(qualified + " -> " + names[i] + ": " + build_errors[i]);
    }
    const SchemaModel visible = schema.with_name(column, names[i]);
    for (const auto& item : q_subset)
      requests[i].push_back(make_request(item.question, visible, data, config.samples_per_table));
  }

  out.records.resize(nc * nm);
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t m = 0; m < nm; ++m) {
      auto& r = out.records[i * nm + m];
      r.column = column;
      r.qualified_name = qualified;
      r.candidate = names[i];
      r.rank = i;
      r.model = models[m]->id();
      r.outcomes.resize(nq);
    }

  const std::size_t workers = std::max<std::size_t>(1, config.parallelism);
  std::vector<std::map<std::size_t, std::unique_ptr<Session>>> sessions(workers);
  parallel_for(nc * nm * nq, workers, [&](std::size_t task, std::size_t w) {
    const std::size_t q = task % nq, m = (task / nq) % nm, i = task / (nq * nm);
    const auto& item = q_subset[q];
    QueryOutcome& o = out.records[i * nm + m].outcomes[q];
    o.query = item.index;
    auto resp = models[m]->infer(requests[i][q]);
    o.predicted_sql = resp.predicted_sql;
    if (!build_errors[i].empty()) {
      o.error = ExecErrorKind::Runtime;
      o.message = build_errors[i];
      return;
    }
    if (resp.failed) {
      o.message = "backend failure: " + resp.error;
      return;
    }
    auto& session = sessions[w][i];
    if (!session) session = std::make_unique<Session>(targets[i]);
    auto res = session->execute(resp.predicted_sql, config.timeout);
    o.error = res.error;
    o.message = res.message;
    o.correct = res.ok() && item.gold && prediction_matches(*res.result, *item.gold);
  });

  out.decision = decide_from_records(column, qualified, candidates.original, out.records, config.tau_min);
  return out;
}

std::size_t predicted_inference_count(const std::vector<std::size_t>& cand_plus_sizes, std::size_t model_count,
                                      const std::vector<std::size_t>& q_sizes) {
  if (cand_plus_sizes.size() != q_sizes.size()) throw Error("candidate and query size lists differ in length");
  std::size_t total = 0;
  for (std::size_t i = 0; i < q_sizes.size(); ++i) total += cand_plus_sizes[i] * model_count * q_sizes[i];
  return total;
}

double estimated_inference_count(std::size_t a_size, std::size_t k, std::size_t model_count, double mean_q) {
  return static_cast<double>(a_size) * static_cast<double>(k) * static_cast<double>(model_count) * mean_q;
}

ScoreLog::ScoreLog(std::filesystem::path file, bool truncate) : file_(std::move(file)) {
  if (truncate) {
    std::ofstream out(file_, std::ios::trunc);
    if (!out) throw Error("cannot create score log " + file_.string());
  }
}

void ScoreLog::append(const std::string& db_id, const std::vector<ScoreRecord>& records) {
  std::string text;
  std::size_t lines = 0;
  for (const auto& r : records)
    for (const auto& o : r.outcomes) {
      json j{{"db_id", db_id},
             {"table", r.column.table},
             {"column", r.column.column},
             {"qualified_name", r.qualified_name},
             {"candidate", r.candidate},
             {"rank", r.rank},
             {"model", r.model},
             {"query", o.query},
             {"correct", o.correct},
             {"predicted_sql", o.predicted_sql},
             {"error", to_string(o.error)},
             {"message", o.message}};
      text += j.dump() + "\n";
      ++lines;
    }
  std::lock_guard lock(mutex_);
  if (!file_.empty()) {
    std::ofstream out(file_, std::ios::app);
    out << text;
    if (!out) throw Error("cannot append to score log " + file_.string());
  }
  lines_ += lines;
}

std::size_t ScoreLog::line_count() const {
  std::lock_guard lock(mutex_);
  return lines_;
}

namespace {

ExecErrorKind error_kind_from_string(const std::string& s) {
  for (auto k : {ExecErrorKind::None, ExecErrorKind::Rejected, ExecErrorKind::Syntax, ExecErrorKind::MissingRelation,
                 ExecErrorKind::MissingColumn, ExecErrorKind::Timeout, ExecErrorKind::Runtime})
    if (s == to_string(k)) return k;
  return ExecErrorKind::Runtime;
}

}  // namespace

std::vector<ScoreLog::Entry> ScoreLog::read(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot read score log " + file.string());
  using Key = std::tuple<std::string, std::size_t, std::size_t, std::size_t, std::string>;
  std::map<Key, std::size_t> where;
  std::vector<Entry> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(file.string() + ":" + std::to_string(n) + ": malformed score record");
    try {
      Key key{j.at("db_id").get<std::string>(), j.at("table").get<std::size_t>(), j.at("column").get<std::size_t>(),
              j.at("rank").get<std::size_t>(), j.at("model").get<std::string>()};
      auto [it, fresh] = where.try_emplace(key, out.size());
      if (fresh) {
        Entry e;
        e.db_id = std::get<0>(key);
        e.record.column = {std::get<1>(key), std::get<2>(key)};
        e.record.qualified_name = j.at("qualified_name").get<std::string>();
        e.record.candidate = j.at("candidate").get<std::string>();
        e.record.rank = std::get<3>(key);
        e.record.model = std::get<4>(key);
        out.push_back(std::move(e));
      }
      out[it->second].record.outcomes.push_back({j.at("query").get<std::size_t>(), j.at("correct").get<bool>(),
                                                 j.value("predicted_sql", ""),
                                                 error_kind_from_string(j.value("error", "none")),
                                                 j.value("message", "")});
    } catch (const json::exception& e) {
      throw Error(file.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace schemaref
