#include "schemaref/conflict.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "schemaref/error.hpp"
#include "schemaref/identifier.hpp"
#include "schemaref/log.hpp"

namespace schemaref {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Kept: return "kept";
    case Provenance::Demoted: return "demoted";
    case Provenance::Reverted: return "reverted";
    case Provenance::Propagated: return "propagated";
  }
  return "?";
}

RefinementMapping ConflictPlan::mapping() const {
  RefinementMapping m;
  for (const auto& e : entries)
    if (e.final_name != e.original) m.entries[e.column] = e.final_name;
  return m;
}

std::size_t ConflictPlan::renamed_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.final_name != e.original; }));
}

const PlanEntry* ConflictPlan::find(ColumnId column) const {
  for (const auto& e : entries)
    if (e.column == column) return &e;
  return nullptr;
}

namespace {

struct Working {
  const RefinementDecision* decision;
  PlanEntry entry;
  std::size_t next_runner_up = 0;
  double base_mean = 0;
};

bool renamed(const Working& w) { return w.entry.final_name != w.entry.original; }

}  // namespace

ConflictPlan resolve(const std::vector<RefinementDecision>& decisions, const SchemaModel& schema) {
  std::map<ColumnId, Working> work;
  for (const auto& d : decisions) {
    if (d.status != DecisionStatus::Committed) continue;
    if (!schema.contains(d.column)) throw Error("decision for unknown column " + d.qualified_name);
    Working w;
    w.decision = &d;
    w.entry = {d.column, d.qualified_name, d.original, d.selected, Provenance::Kept, d.delta, {}};
    w.base_mean = d.scores.empty() ? 0 : d.scores.front().mean;
    work[d.column] = std::move(w);
  }

  auto current_mapping = [&] {
    RefinementMapping m;
    for (const auto& [id, w] : work)
      if (renamed(w)) m.entries[id] = w.entry.final_name;
    return m;
  };
  auto collides_with_any = [&](ColumnId self, const std::string& name) {
    const auto m = current_mapping();
    for (ColumnId other : schema.column_ids())
      if (other != self && names_conflict(schema, self, name, other, m.name_of(schema, other))) return true;
    return false;
  };
  auto revert = [&](Working& w, const std::string& why) {
    w.entry.final_name = w.entry.original;
    w.entry.provenance = Provenance::Reverted;
    w.entry.delta.reset();
    w.entry.note = why;
  };

  ConflictPlan plan;
  for (int pass = 1; pass <= kMaxConflictIterations; ++pass) {
    auto verdict = check_admissible(schema, current_mapping());
    if (verdict.ok()) break;
    plan.iterations = pass;
    std::set<ColumnId> changed;
    for (const auto& v : verdict.violations) {
      if (changed.count(v.first) || changed.count(v.second)) continue;
      auto* a = work.count(v.first) ? &work[v.first] : nullptr;
      auto* b = work.count(v.second) ? &work[v.second] : nullptr;
      const bool a_renamed = a && renamed(*a), b_renamed = b && renamed(*b);
      if (!a_renamed && !b_renamed) continue;
      Working* loser;
      ColumnId winner_id;
      std::optional<double> winner_delta;
      if (!a_renamed || !b_renamed) {
        loser = a_renamed ? a : b;
        winner_id = a_renamed ? v.second : v.first;
      } else {
        const double da = a->entry.delta.value_or(0), db = b->entry.delta.value_or(0);
        const bool a_wins = da > db + kScoreEpsilon || (std::abs(da - db) <= kScoreEpsilon && v.first < v.second);
        loser = a_wins ? b : a;
        winner_id = a_wins ? v.first : v.second;
        winner_delta = a_wins ? a->entry.delta : b->entry.delta;
      }

      DemotionEvent ev;
      ev.iteration = pass;
      ev.loser = loser->entry.column;
      ev.winner = winner_id;
      ev.from = loser->entry.final_name;
      ev.loser_delta = loser->entry.delta.value_or(0);
      ev.winner_delta = winner_delta;
      const auto& runners = loser->decision->runner_ups;
      bool placed = false;
      while (loser->next_runner_up < runners.size()) {
        const auto& r = runners[loser->next_runner_up++];
        if (iequals(r.name, ev.from) || collides_with_any(loser->entry.column, r.name)) continue;
        loser->entry.final_name = r.name;
        loser->entry.provenance = Provenance::Demoted;
        loser->entry.delta = r.mean - loser->base_mean;
        loser->entry.note = "lost '" + ev.from + "' to " + schema.qualified_name(winner_id);
        placed = true;
        break;
      }
      if (!placed) revert(*loser, "lost '" + ev.from + "' to " + schema.qualified_name(winner_id) + "; no viable runner-up");
      ev.to = loser->entry.final_name;
      ev.reverted = !placed;
      plan.events.push_back(ev);
      changed.insert(loser->entry.column);
    }
  }

  for (;;) {
    auto verdict = check_admissible(schema, current_mapping());
    if (verdict.ok()) break;
    plan.revert_pass = true;
    bool progressed = false;
    for (const auto& v : verdict.violations) {
      auto* a = work.count(v.first) ? &work[v.first] : nullptr;
      auto* b = work.count(v.second) ? &work[v.second] : nullptr;
      const bool a_renamed = a && renamed(*a), b_renamed = b && renamed(*b);
      if (!a_renamed && !b_renamed) continue;
      Working* loser;
      if (!a_renamed || !b_renamed) {
        loser = a_renamed ? a : b;
      } else {
        const double da = a->entry.delta.value_or(0), db = b->entry.delta.value_or(0);
        const bool a_wins = da > db + kScoreEpsilon || (std::abs(da - db) <= kScoreEpsilon && v.first < v.second);
        loser = a_wins ? b : a;
      }
      DemotionEvent ev;
      ev.iteration = kMaxConflictIterations + 1;
      ev.loser = loser->entry.column;
      ev.winner = loser == a ? v.second : v.first;
      ev.from = loser->entry.final_name;
      ev.loser_delta = loser->entry.delta.value_or(0);
      const auto* w = work.count(ev.winner) ? &work[ev.winner] : nullptr;
      if (w && renamed(*w)) ev.winner_delta = w->entry.delta;
      revert(*loser, "unresolved collision after " + std::to_string(kMaxConflictIterations) + " passes");
      ev.to = loser->entry.final_name;
      ev.reverted = true;
      plan.events.push_back(ev);
      progressed = true;
      break;
    }
    if (!progressed) throw Error("collision between unrenamed columns; the base schema violates admissibility");
  }

  for (auto& [id, w] : work) plan.entries.push_back(std::move(w.entry));
  return plan;
}

bool crd_check(const CrdInstance& inst, const std::vector<std::string>& assignment) {
  if (assignment.size() != inst.lists.size()) return false;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const auto& l = inst.lists[i];
    if (std::none_of(l.begin(), l.end(), [&](const std::string& n) { return iequals(n, assignment[i]); })) return false;
    if (inst.forced[i] && iequals(assignment[i], inst.original[i])) return false;
  }
  for (auto [a, b] : inst.edges)
    if (iequals(assignment[a], assignment[b])) return false;
  return true;
}

CrdResult crd_feasible_bruteforce(const CrdInstance& inst) {
  const std::size_t n = inst.lists.size();
  if (inst.original.size() != n || inst.forced.size() != n) throw Error("inconsistent CRD instance");
  double product = 1;
  for (const auto& l : inst.lists) {
    if (l.empty()) throw Error("CRD instance has an empty candidate list");
    product *= static_cast<double>(l.size());
  }
  if (product > kCrdAssignmentLimit)
    throw Error("CRD instance has " + std::to_string(static_cast<long long>(product)) +
                " assignments; brute force refuses more than 1000000");

  std::vector<std::vector<std::size_t>> earlier(n);
  for (auto [a, b] : inst.edges) {
    if (a >= n || b >= n) throw Error("CRD edge out of range");
    earlier[std::max(a, b)].push_back(std::min(a, b));
  }
  CrdResult result;
  std::vector<std::string> pick(n);
  std::function<bool(std::size_t)> search = [&](std::size_t i) {
    if (i == n) return true;
    for (const auto& name : inst.lists[i]) {
      if (inst.forced[i] && iequals(name, inst.original[i])) continue;
      if (std::any_of(earlier[i].begin(), earlier[i].end(), [&](std::size_t j) { return iequals(pick[j], name); }))
        continue;
      pick[i] = name;
      if (search(i + 1)) return true;
    }
    return false;
  };
  if (search(0)) {
    result.feasible = true;
    result.witness = pick;
  }
  return result;
}

CrdInstance induced_crd_instance(const std::vector<RefinementDecision>& decisions, const SchemaModel& schema) {
  std::map<ColumnId, const RefinementDecision*> committed;
  for (const auto& d : decisions)
    if (d.status == DecisionStatus::Committed) committed[d.column] = &d;

  CrdInstance inst;
  const auto ids = schema.column_ids();
  for (ColumnId id : ids) {
    const auto& col = schema.column(id);
    inst.original.push_back(col.name);
    if (auto it = committed.find(id); it != committed.end()) {
      std::vector<std::string> list{it->second->selected};
      for (const auto& r : it->second->runner_ups)
        if (std::none_of(list.begin(), list.end(), [&](const auto& n) { return iequals(n, r.name); }))
          list.push_back(r.name);
      inst.lists.push_back(std::move(list));
      inst.forced.push_back(true);
    } else {
      inst.lists.push_back({col.name});
      inst.forced.push_back(false);
    }
  }
  const std::string probe = "x";
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      if (names_conflict(schema, ids[i], probe, ids[j], probe)) inst.edges.emplace_back(i, j);
  return inst;
}

}  // namespace schemaref
