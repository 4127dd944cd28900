#include "schemaref/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "schemaref/error.hpp"

namespace schemaref {

using nlohmann::json;

FunnelReport make_funnel(std::size_t m, std::size_t excluded, std::size_t n, std::size_t n_r,
                         const std::vector<double>& deltas) {
  if (n > m || n_r > n || excluded + n > m) throw Error("inconsistent funnel counts");
  FunnelReport f;
  f.m = m;
  f.excluded = excluded;
  f.n = n;
  f.unflagged = m - excluded - n;
  f.n_r = n_r;
  f.exclusion_rate = m ? 1.0 - static_cast<double>(n) / static_cast<double>(m) : 0.0;
  f.compression = m ? static_cast<double>(n_r) / static_cast<double>(m) : 0.0;
  if (!deltas.empty()) {
    double sum = 0;
    for (double d : deltas) sum += d;
    f.mean_delta = sum / static_cast<double>(deltas.size());
  }
  return f;
}

FunnelReport funnel(const SchemaModel& schema, const ScreeningResult& screening,
                    const std::vector<RefinementDecision>& decisions, const ConflictPlan& plan) {
  std::vector<double> deltas;
  for (const auto& e : plan.entries)
    if (e.final_name != e.original && (e.provenance == Provenance::Kept || e.provenance == Provenance::Demoted))
      deltas.push_back(e.delta.value_or(0));
  const auto flagged = screening.flagged().size();
  FunnelReport f = make_funnel(schema.column_count(), screening.excluded.size(), flagged, deltas.size(), deltas);
  f.unflagged = screening.unflagged_count();
  for (const auto& d : decisions) {
    if (d.status == DecisionStatus::Skipped) ++f.skipped;
    if (d.status == DecisionStatus::Retained) ++f.retained;
  }
  return f;
}

FlipReport flips(const std::vector<std::pair<std::size_t, bool>>& before,
                 const std::vector<std::pair<std::size_t, bool>>& after) {
  std::map<std::size_t, bool> b, a;
  for (const auto& [q, c] : before)
    if (!b.emplace(q, c).second) throw Error("duplicate query " + std::to_string(q) + " in flip input");
  for (const auto& [q, c] : after)
    if (!a.emplace(q, c).second) throw Error("duplicate query " + std::to_string(q) + " in flip input");
  if (b.size() != a.size() || !std::equal(b.begin(), b.end(), a.begin(), [](auto& x, auto& y) { return x.first == y.first; }))
    throw Error("flip analysis needs the same query set on both sides");
  FlipReport r;
  for (const auto& [q, was] : b) {
    const bool now = a.at(q);
    Flip f = was ? (now ? Flip::CorrectToCorrect : Flip::CorrectToWrong) : (now ? Flip::WrongToCorrect : Flip::WrongToWrong);
    switch (f) {
      case Flip::CorrectToCorrect: ++r.cc; break;
      case Flip::CorrectToWrong: ++r.cw; break;
      case Flip::WrongToCorrect: ++r.wc; break;
      case Flip::WrongToWrong: ++r.ww; break;
    }
    r.per_query.emplace_back(q, f);
  }
  if (r.cw > 0) r.repair_ratio = static_cast<double>(r.wc) / static_cast<double>(r.cw);
  return r;
}

FlipReport flips(const std::vector<ItemOutcome>& before, const std::vector<ItemOutcome>& after) {
  std::vector<std::pair<std::size_t, bool>> b, a;
  for (const auto& o : before) b.emplace_back(o.item_index, o.correct);
  for (const auto& o : after) a.emplace_back(o.item_index, o.correct);
  return flips(b, a);
}

CoverageRow coverage(std::string db_id, std::size_t n_r, std::size_t m, std::optional<double> delta) {
  if (n_r > m) throw Error("coverage: n_r exceeds m");
  CoverageRow r;
  r.db_id = std::move(db_id);
  r.n_r = n_r;
  r.m = m;
  r.coverage = m ? static_cast<double>(n_r) / static_cast<double>(m) : 0.0;
  r.delta = delta;
  r.consistent = !(n_r == 0 && delta && *delta != 0.0);
  return r;
}

RunReport aggregate(std::vector<DatabaseReport> databases) {
  RunReport r;
  std::size_t m = 0, excluded = 0, n = 0, n_r = 0, skipped = 0, retained = 0;
  std::vector<double> deltas;
  for (const auto& d : databases) {
    m += d.funnel.m;
    excluded += d.funnel.excluded;
    n += d.funnel.n;
    n_r += d.funnel.n_r;
    skipped += d.funnel.skipped;
    retained += d.funnel.retained;
    for (const auto& e : d.plan.entries)
      if (e.final_name != e.original && (e.provenance == Provenance::Kept || e.provenance == Provenance::Demoted))
        deltas.push_back(e.delta.value_or(0));
  }
  r.total = make_funnel(m, excluded, n, n_r, deltas);
  r.total.skipped = skipped;
  r.total.retained = retained;
  r.databases = std::move(databases);
  return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const QualityReport& q) {
  json per = json::object();
  for (const auto& [id, v] : q.per_model) per[id] = v;
  return {{"quality", q.quality}, {"per_model", std::move(per)}};
}

json to_json(const CandidateScore& s) { return {{"name", s.name}, {"rank", s.rank}, {"mean", s.mean}}; }

const char* flip_name(Flip f) {
  switch (f) {
    case Flip::CorrectToCorrect: return "C->C";
    case Flip::CorrectToWrong: return "C->W";
    case Flip::WrongToCorrect: return "W->C";
    case Flip::WrongToWrong: return "W->W";
  }
  return "?";
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double v) { return fmt("%.1f%%", v * 100.0); }

std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], r[i].size());
    }
  std::string out;
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    std::string line;
    for (std::size_t i = 0; i < rows[ri].size(); ++i) {
      if (i) line += "  ";
      line += rows[ri][i] + std::string(width[i] - rows[ri][i].size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (ri == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  return out;
}

}  // namespace

json to_json(const FunnelReport& f) {
  return {{"m", f.m},
          {"excluded", f.excluded},
          {"unflagged", f.unflagged},
          {"n", f.n},
          {"skipped", f.skipped},
          {"retained", f.retained},
          {"n_r", f.n_r},
          {"exclusion_rate", f.exclusion_rate},
          {"compression", f.compression},
          {"mean_delta", opt(f.mean_delta)}};
}

json to_json(const FlipReport& f) {
  json per = json::array();
  for (const auto& [q, flip] : f.per_query) per.push_back({{"query", q}, {"flip", flip_name(flip)}});
  return {{"C->C", f.cc}, {"C->W", f.cw}, {"W->C", f.wc}, {"W->W", f.ww}, {"repair_ratio", opt(f.repair_ratio)},
          {"per_query", std::move(per)}};
}

json to_json(const RefinementDecision& d) {
  json scores = json::array(), runners = json::array();
  for (const auto& s : d.scores) scores.push_back(to_json(s));
  for (const auto& s : d.runner_ups) runners.push_back(to_json(s));
  return {{"column", d.qualified_name},
          {"table_index", d.column.table},
          {"column_index", d.column.column},
          {"original", d.original},
          {"selected", d.selected},
          {"status", to_string(d.status)},
          {"delta", opt(d.delta)},
          {"scores", std::move(scores)},
          {"runner_ups", std::move(runners)}};
}

json to_json(const ConflictPlan& plan) {
  json entries = json::array(), events = json::array();
  for (const auto& e : plan.entries)
    entries.push_back({{"column", e.qualified_name},
                       {"original", e.original},
                       {"final_name", e.final_name},
                       {"provenance", to_string(e.provenance)},
                       {"delta", opt(e.delta)},
                       {"note", e.note}});
  for (const auto& e : plan.events)
    events.push_back({{"iteration", e.iteration},
                      {"loser", {e.loser.table, e.loser.column}},
                      {"winner", {e.winner.table, e.winner.column}},
                      {"from", e.from},
                      {"to", e.to},
                      {"loser_delta", e.loser_delta},
                      {"winner_delta", opt(e.winner_delta)},
                      {"reverted", e.reverted}});
  return {{"iterations", plan.iterations},
          {"revert_pass", plan.revert_pass},
          {"entries", std::move(entries)},
          {"events", std::move(events)}};
}

json to_json(const RunReport& report) {
  json dbs = json::array();
  for (const auto& d : report.databases) {
    json decisions = json::array();
    for (const auto& x : d.decisions) decisions.push_back(to_json(x));
    json j{{"db_id", d.db_id},
           {"funnel", to_json(d.funnel)},
           {"exacc_before", d.before ? to_json(*d.before) : json(nullptr)},
           {"exacc_after", d.after ? to_json(*d.after) : json(nullptr)},
           {"exacc_clean", d.clean ? to_json(*d.clean) : json(nullptr)},
           {"recovery_rate", opt(d.recovery_rate)},
           {"flips", d.flips ? to_json(*d.flips) : json(nullptr)},
           {"coverage",
            {{"n_r", d.coverage.n_r},
             {"m", d.coverage.m},
             {"coverage", d.coverage.coverage},
             {"delta", opt(d.coverage.delta)},
             {"consistent", d.coverage.consistent}}},
           {"equivalence", {{"checked", d.equivalence_checked}, {"discrepancies", d.equivalence_discrepancies}}},
           {"inferences",
            {{"predicted", d.predicted_inferences},
             {"logged", d.logged_inferences},
             {"invoked", d.invoked_inferences}}},
           {"decisions", std::move(decisions)},
           {"plan", to_json(d.plan)}};
    dbs.push_back(std::move(j));
  }
  return {{"total", to_json(report.total)}, {"databases", std::move(dbs)}};
}

std::string render_text(const json& report) {
  std::ostringstream out;
  auto num = [](const json& v, const char* f) { return v.is_number() ? fmt(f, v.get<double>()) : std::string("-"); };
  auto count = [](const json& v) { return v.is_number() ? std::to_string(v.get<long long>()) : std::string("-"); };
  const auto& dbs = report.at("databases");

  out << "Screening funnel\n";
  std::vector<std::vector<std::string>> rows{
      {"database", "m", "excluded", "unflagged", "n", "skipped", "retained", "n_r", "excl. rate", "compression",
       "mean delta"}};
  auto funnel_row = [&](const std::string& name, const json& f) {
    rows.push_back({name, count(f["m"]), count(f["excluded"]), count(f["unflagged"]), count(f["n"]),
                    count(f["skipped"]), count(f["retained"]), count(f["n_r"]),
                    pct(f["exclusion_rate"].get<double>()), fmt("%.2f%%", f["compression"].get<double>() * 100.0),
                    num(f["mean_delta"], "%+.3f")});
  };
  for (const auto& d : dbs) funnel_row(d["db_id"].get<std::string>(), d["funnel"]);
  if (dbs.size() > 1) funnel_row("(all)", report.at("total"));
  out << table(rows) << "\n";

  out << "Execution accuracy\n";
  rows = {{"database", "before", "after", "clean", "recovery", "coverage", "W->C", "C->W", "repair ratio",
           "discrepancies", "inferences"}};
  for (const auto& d : dbs) {
    auto q = [&](const json& r) { return r.is_object() ? num(r["quality"], "%.4f") : std::string("-"); };
    const json& fl = d["flips"];
    rows.push_back({d["db_id"].get<std::string>(), q(d["exacc_before"]), q(d["exacc_after"]), q(d["exacc_clean"]),
                    num(d["recovery_rate"], "%.1f%%"), pct(d["coverage"]["coverage"].get<double>()),
                    fl.is_object() ? count(fl["W->C"]) : "-", fl.is_object() ? count(fl["C->W"]) : "-",
                    fl.is_object() ? num(fl["repair_ratio"], "%.2f") : "-",
                    count(d["equivalence"]["discrepancies"]) + " of " + count(d["equivalence"]["checked"]),
                    count(d["inferences"]["logged"]) + " of " + count(d["inferences"]["predicted"])});
  }
  out << table(rows) << "\n";

  for (const auto& d : dbs) {
    out << "Decisions (" << d["db_id"].get<std::string>() << ")\n";
    rows = {{"column", "selected", "status", "delta", "final", "provenance"}};
    std::map<std::string, const json*> plan;
    for (const auto& e : d["plan"]["entries"]) plan[e["column"].get<std::string>()] = &e;
    for (const auto& x : d["decisions"]) {
      const auto col = x["column"].get<std::string>();
      auto it = plan.find(col);
      rows.push_back({col, x["selected"].get<std::string>(), x["status"].get<std::string>(), num(x["delta"], "%+.3f"),
                      it != plan.end() ? (*it->second)["final_name"].get<std::string>() : x["original"].get<std::string>(),
                      it != plan.end() ? (*it->second)["provenance"].get<std::string>() : "-"});
    }
    for (const auto& e : d["plan"]["entries"])
      if (e["provenance"] == "propagated")
        rows.push_back({e["column"].get<std::string>(), "-", "-", "-", e["final_name"].get<std::string>(), "propagated"});
    out << table(rows) << "\n";
  }
  return out.str();
}

}  // namespace schemaref
