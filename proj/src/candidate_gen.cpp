#include "schemaref/candidate_gen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "schemaref/error.hpp"
#include "schemaref/identifier.hpp"
#include "schemaref/log.hpp"

namespace schemaref {

using nlohmann::json;

std::string GenerationContext::serialize() const {
  json neigh = json::array();
  for (const auto& n : neighbors) neigh.push_back({{"name", n.name}, {"data_type", n.data_type}, {"samples", n.samples}});
  return json{{"domain_description", domain_description},
              {"table", table},
              {"column", column_name},
              {"data_type", data_type},
              {"neighbors", std::move(neigh)},
              {"target_samples", target_samples},
              {"guidelines", guidelines}}
      .dump();
}

GenerationContext build_context(const SchemaModel& schema, ColumnId column, const DataSource& data, std::uint64_t seed,
                                std::size_t target_samples) {
  const auto& col = schema.column(column);
  const auto& table = schema.tables()[column.table];
  GenerationContext ctx;
  ctx.column = column;
  ctx.domain_description = schema.domain_description();
  ctx.table = table.name;
  ctx.column_name = col.name;
  ctx.data_type = col.data_type;
  for (const auto& c : table.columns) {
    if (c.id == column) continue;
    ctx.neighbors.push_back({c.name, c.data_type, data.column_samples(c.id, kNeighborSamples, seed)});
  }
  ctx.target_samples = data.column_samples(column, target_samples, seed);
  return ctx;
}

std::vector<std::string> CandidateSet::augmented() const {
  std::vector<std::string> out{original};
  for (const auto& c : candidates)
    if (std::none_of(out.begin(), out.end(), [&](const std::string& o) { return iequals(o, c); })) out.push_back(c);
  return out;
}

namespace {

std::vector<std::string> split_tokens(const std::string& normalized) {
  std::vector<std::string> out;
  std::stringstream ss(normalized);
  std::string tok;
  while (std::getline(ss, tok, '_'))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::string fold_plural(std::string t) {
  if (t.size() > 3 && t.back() == 's' && t[t.size() - 2] != 's') t.pop_back();
  return t;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += '_';
    out += p;
  }
  return out;
}

}  // namespace

DictionaryGenerator::DictionaryGenerator() : table_(builtin_table()) {}

DictionaryGenerator::Table DictionaryGenerator::builtin_table() {
  return {
      {"addr", {"address"}},        {"amt", {"amount"}},          {"avg", {"average"}},
      {"cat", {"category"}},        {"cd", {"code"}},             {"cnt", {"count"}},
      {"cntry", {"country"}},       {"crs", {"course"}},          {"cust", {"customer"}},
      {"desc", {"description"}},    {"dept", {"department"}},     {"dob", {"date_of_birth", "birth_date"}},
      {"dt", {"date"}},             {"dur", {"duration"}},        {"emp", {"employee"}},
      {"fname", {"first_name"}},    {"ht", {"height"}},           {"lang", {"language"}},
      {"lname", {"last_name"}},     {"loc", {"location"}},        {"lvl", {"level"}},
      {"mgr", {"manager"}},         {"mth", {"month"}},           {"nm", {"name", "full_name"}},
      {"num", {"number"}},          {"ord", {"order"}},          {"org", {"organization"}},    {"pct", {"percent"}},
      {"ph", {"phone"}},            {"pop", {"population"}},      {"pos", {"position"}},
      {"prod", {"product"}},        {"qty", {"quantity"}},        {"sal", {"salary", "pay"}},
      {"stu", {"student"}},         {"tel", {"telephone", "phone"}}, {"tot", {"total"}},
      {"ttl", {"title"}},           {"wt", {"weight"}},           {"yr", {"year"}},
  };
}

DictionaryGenerator DictionaryGenerator::from_file(const std::filesystem::path& tsv) {
  std::ifstream in(tsv);
  if (!in) throw Error("cannot read dictionary " + tsv.string());
  Table table = builtin_table();
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      log::warn(tsv.string() + ":" + std::to_string(n) + ": expected abbr<TAB>expansion");
      continue;
    }
    std::vector<std::string> expansions;
    std::stringstream rest(line.substr(tab + 1));
    std::string e;
    while (std::getline(rest, e, ','))
      if (auto norm = normalize_candidate(e); !norm.empty()) expansions.push_back(norm);
    if (!expansions.empty()) table[to_lower(line.substr(0, tab))] = std::move(expansions);
  }
  return DictionaryGenerator(std::move(table));
}

std::optional<std::vector<std::string>> DictionaryGenerator::propose(const GenerationContext& ctx, std::size_t) {
  const auto tokens = split_tokens(normalize_candidate(ctx.column_name));
  std::vector<std::string> primary;
  for (const auto& t : tokens) {
    auto it = table_.find(t);
    primary.push_back(it == table_.end() ? t : it->second.front());
  }
  const std::string expansion = join(primary);

  std::set<std::string> expansion_tokens;
  for (const auto& t : split_tokens(expansion)) expansion_tokens.insert(fold_plural(t));
  std::vector<std::string> table_tokens;
  for (const auto& t : split_tokens(normalize_candidate(ctx.table))) table_tokens.push_back(fold_plural(t));
  const bool names_table = std::any_of(table_tokens.begin(), table_tokens.end(),
                                       [&](const std::string& t) { return expansion_tokens.count(t) > 0; });

  std::vector<std::string> out;
  if (!names_table && !table_tokens.empty()) out.push_back(join(table_tokens) + "_" + expansion);
  out.push_back(expansion);
  for (std::size_t pos = tokens.size(); pos-- > 0;) {
    auto it = table_.find(tokens[pos]);
    if (it == table_.end()) continue;
    for (std::size_t a = 1; a < it->second.size(); ++a) {
      auto variant = primary;
      variant[pos] = it->second[a];
      out.push_back(join(variant));
    }
  }
  return out;
}

std::vector<ChatMessage> LlmGenerator::build_prompt(const GenerationContext& ctx, std::size_t k) {
  std::string user;
  user += "Database domain: " + ctx.domain_description + "\n";
  user += "Table: " + ctx.table + "\n";
  user += "Column to rename: " + ctx.column_name + " (type " + (ctx.data_type.empty() ? "unspecified" : ctx.data_type) + ")\n";
  user += "Sample values:";
  for (const auto& s : ctx.target_samples) user += " " + quote_literal(s);
  user += "\nOther columns:\n";
  for (const auto& n : ctx.neighbors) {
    user += "- " + n.name + " (" + (n.data_type.empty() ? "unspecified" : n.data_type) + "):";
    for (const auto& s : n.samples) user += " " + quote_literal(s);
    user += "\n";
  }
  user += "Guidelines:\n" + ctx.guidelines + "\n\n";
  user += "Propose up to " + std::to_string(k) +
          " column names, best first, as a JSON array of strings. Reply with the array only.";
  return {{"system", "You rename database columns so that Text-to-SQL systems understand them."},
          {"user", std::move(user)}};
}

std::optional<std::vector<std::string>> LlmGenerator::propose(const GenerationContext& ctx, std::size_t k) {
  auto reply = chat_complete(endpoint_, build_prompt(ctx, k));
  if (!reply.content) {
    log::warn("generator " + id_ + " failed for " + ctx.table + "." + ctx.column_name + ": " + reply.error);
    return std::nullopt;
  }
  auto names = extract_string_array(*reply.content);
  if (!names) {
    log::warn("generator " + id_ + " returned no name list for " + ctx.table + "." + ctx.column_name);
    return std::vector<std::string>{};
  }
  return names;
}

CandidateSet generate(const SchemaModel& schema, const GenerationContext& ctx, Generator& generator, std::size_t k) {
  if (k == 0) throw Error("candidate count k must be at least 1");
  CandidateSet set;
  set.column = ctx.column;
  set.original = schema.column(ctx.column).name;
  set.generator = generator.id();
  auto raw = generator.propose(ctx, k);
  if (!raw) return set;

  const auto all = schema.column_ids();
  for (const auto& proposal : *raw) {
    if (set.candidates.size() >= k) break;
    const std::string name = normalize_candidate(proposal);
    if (name.empty() || !is_plain_identifier(name) || iequals(name, set.original)) continue;
    if (std::any_of(set.candidates.begin(), set.candidates.end(), [&](const auto& c) { return iequals(c, name); }))
      continue;
    const bool collides = std::any_of(all.begin(), all.end(), [&](ColumnId other) {
      return other != ctx.column && names_conflict(schema, ctx.column, name, other, schema.column(other).name);
    });
    if (collides) continue;
    set.candidates.push_back(name);
  }
  return set;
}

}  // namespace schemaref
