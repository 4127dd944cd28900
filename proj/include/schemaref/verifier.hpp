#pragma once

#include <chrono>
#include <filesystem>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "schemaref/backend.hpp"
#include "schemaref/candidate_gen.hpp"
#include "schemaref/exec.hpp"
#include "schemaref/schema.hpp"
#include "schemaref/workload.hpp"

namespace schemaref {

inline constexpr double kDefaultTauMin = 0.05;
/// Slack for comparing score differences against thresholds.
inline constexpr double kScoreEpsilon = 1e-9;

struct QueryOutcome {
  std::size_t query = 0;  ///< workload item index
  bool correct = false;
  std::string predicted_sql;
  ExecErrorKind error = ExecErrorKind::None;
  std::string message;
};

/// Outcomes of one model on one candidate over Q(c).
struct ScoreRecord {
  ColumnId column;
  std::string qualified_name;  ///< original `table.column`
  std::string candidate;
  std::size_t rank = 0;  ///< 0 for the original name
  std::string model;
  std::vector<QueryOutcome> outcomes;

  double score() const;  ///< correct / |outcomes|
};

enum class DecisionStatus { Committed, Retained, Skipped };

const char* to_string(DecisionStatus status);
DecisionStatus decision_status_from_string(const std::string& s);

struct CandidateScore {
  std::string name;
  std::size_t rank = 0;
  double mean = 0;  ///< mean score over models
};

struct RefinementDecision {
  ColumnId column;
  std::string qualified_name;
  std::string original;
  std::string selected;
  std::optional<double> delta;  ///< empty when skipped
  DecisionStatus status = DecisionStatus::Skipped;
  std::vector<CandidateScore> scores;      ///< Cand⁺ order
  std::vector<CandidateScore> runner_ups;  ///< Δ ≥ τ_min, best first, selected excluded
};

/// Argmax over `scores` (index 0 is the original). The original wins every
/// tie; among tied candidates the better generator rank wins. Commits when
/// the winner is not the original and Δ ≥ tau_min.
RefinementDecision decide(ColumnId column, std::string qualified_name, const std::vector<CandidateScore>& scores,
                          double tau_min);

/// Mean-over-models scores per candidate, in rank order. Throws when a
/// (candidate, model) pair is missing or covers a different query set.
std::vector<CandidateScore> aggregate_scores(const std::vector<ScoreRecord>& records);

/// Recomputes a decision from stored records; no records means skipped.
RefinementDecision decide_from_records(ColumnId column, std::string qualified_name, std::string original,
                                       const std::vector<ScoreRecord>& records, double tau_min);

struct VerifierConfig {
  double tau_min = kDefaultTauMin;
  std::size_t parallelism = 1;
  std::size_t samples_per_table = 5;
  std::chrono::milliseconds timeout = kDefaultTimeout;
};

struct ColumnVerification {
  RefinementDecision decision;
  std::vector<ScoreRecord> records;  ///< (rank, model) order
};

/// Scores every name in Cand⁺ with every model on every query of Q(c),
/// each candidate seen through in-memory temporary views over `db_path`.
ColumnVerification verify_column(const SchemaModel& schema, const CandidateSet& candidates,
                                 const std::vector<WorkloadItem>& q_subset,
                                 const std::vector<std::shared_ptr<Text2SqlBackend>>& models,
                                 const std::filesystem::path& db_path, const DataSource* data,
                                 const VerifierConfig& config);

/// Σ |Cand⁺(c)| · model_count · |Q(c)|.
std::size_t predicted_inference_count(const std::vector<std::size_t>& cand_plus_sizes, std::size_t model_count,
                                      const std::vector<std::size_t>& q_sizes);

/// Budget estimate |A| · k · |M| · mean |Q(c)|.
double estimated_inference_count(std::size_t a_size, std::size_t k, std::size_t model_count, double mean_q);

/// Append-only JSON Lines log, one line per (column, candidate, model,
/// query). Thread-safe.
class ScoreLog {
public:
  ScoreLog() = default;  ///< in-memory only
  explicit ScoreLog(std::filesystem::path file, bool truncate = true);

  void append(const std::string& db_id, const std::vector<ScoreRecord>& records);
  std::size_t line_count() const;

  struct Entry {
    std::string db_id;
    ScoreRecord record;
  };
  /// Regroups lines into records, preserving first-seen order.
  static std::vector<Entry> read(const std::filesystem::path& file);

private:
  mutable std::mutex mutex_;
  std::filesystem::path file_;
  std::size_t lines_ = 0;
};

}  // namespace schemaref
