#include "schemaref/screening.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include <json.hpp>

#include "schemaref/identifier.hpp"
#include "schemaref/parallel.hpp"

namespace schemaref {

using nlohmann::json;

std::string ScreeningContext::serialize() const {
  json rows = json::array();
  for (const auto& r : sample_rows) {
    json row = json::array();
    for (const auto& v : r) row.push_back(v ? json(*v) : json(nullptr));
    rows.push_back(std::move(row));
  }
  return json{{"domain_description", domain_description},
              {"table", table},
              {"column", column_name},
              {"data_type", data_type},
              {"neighbor_columns", neighbor_columns},
              {"sample_header", sample_header},
              {"sample_rows", std::move(rows)},
              {"criteria", criteria}}
      .dump();
}

namespace {

constexpr std::array kGenericWords = {"label", "value", "data", "info", "type", "code"};

bool has_vowel(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    switch (std::tolower(static_cast<unsigned char>(c))) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return true;
      default: return false;
    }
  });
}

std::vector<std::string> segments(const std::string& name) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : name) {
    if (c == '_') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

ScreenAnswer RuleScreener::assess(const ScreeningContext& ctx) {
  static const std::regex letter_code("^[A-Za-z][0-9]+$");
  const std::string& name = ctx.column_name;
  if (name.size() <= 3) return {true, true, "name has at most 3 characters"};
  for (const auto& seg : segments(name))
    if (seg.size() <= 6 && !has_vowel(seg) && std::any_of(seg.begin(), seg.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); }))
      return {true, true, "abbreviated segment '" + seg + "'"};
  if (std::regex_match(name, letter_code)) return {true, true, "single-letter code"};
  const std::string lower = to_lower(name);
  for (const char* w : kGenericWords)
    if (lower == w) return {true, true, "generic word"};
  return {true, false, "no rule matched"};
}

std::vector<ChatMessage> LlmScreener::build_prompt(const ScreeningContext& ctx) {
  std::string user;
  user += "Database domain: " + ctx.domain_description + "\n";
  user += "Table: " + ctx.table + "\n";
  user += "Column: " + ctx.column_name + " (type " + (ctx.data_type.empty() ? "unspecified" : ctx.data_type) + ")\n";
  user += "Other columns in the table: ";
  for (std::size_t i = 0; i < ctx.neighbor_columns.size(); ++i) user += (i ? ", " : "") + ctx.neighbor_columns[i];
  user += "\nSample rows:\n";
  for (std::size_t i = 0; i < ctx.sample_header.size(); ++i) user += (i ? " | " : "") + ctx.sample_header[i];
  user += "\n";
  for (const auto& row : ctx.sample_rows) {
    for (std::size_t i = 0; i < row.size(); ++i) user += (i ? " | " : "") + row[i].value_or("NULL");
    user += "\n";
  }
  user += "Criteria: " + ctx.criteria + "\n\n";
  user += std::string(kScreeningQuestion) + "\nAnswer yes or no as the first word, then give a one-sentence reason.";
  return {{"system", "You review database schemas for naming problems."}, {"user", std::move(user)}};
}

ScreenAnswer LlmScreener::parse_answer(const std::string& content) {
  std::size_t i = 0;
  while (i < content.size() && !std::isalpha(static_cast<unsigned char>(content[i]))) ++i;
  std::size_t j = i;
  while (j < content.size() && std::isalpha(static_cast<unsigned char>(content[j]))) ++j;
  const std::string first = to_lower(content.substr(i, j - i));
  if (first == "yes") return {true, true, content};
  if (first == "no") return {true, false, content};
  return {true, true, "unparseable answer: " + content};
}

ScreenAnswer LlmScreener::assess(const ScreeningContext& ctx) {
  auto reply = chat_complete(endpoint_, build_prompt(ctx));
  if (!reply.content) return {false, true, "screener unavailable: " + reply.error};
  return parse_answer(*reply.content);
}

std::vector<Exclusion> structural_exclusions(const SchemaModel& schema) {
  std::vector<Exclusion> out;
  const auto ids = schema.column_ids();
  for (ColumnId id : ids) {
    const auto& col = schema.column(id);
    if (col.is_fk) {
      out.push_back({id, schema.qualified_name(id), "foreign key"});
      continue;
    }
    for (ColumnId other : ids) {
      if (other.table == id.table) continue;
      const auto& o = schema.column(other);
      if (iequals(o.name, col.name) && iequals(o.data_type, col.data_type) && !schema.fk_linked(id, other)) {
        out.push_back({id, schema.qualified_name(id), "implicit join key (homonym of " + schema.qualified_name(other) + ")"});
        break;
      }
    }
  }
  return out;
}

ScreeningContext build_screening_context(const SchemaModel& schema, ColumnId column, const DataSource& data) {
  const auto& col = schema.column(column);
  const auto& table = schema.tables()[column.table];
  ScreeningContext ctx;
  ctx.column = column;
  ctx.domain_description = schema.domain_description();
  ctx.table = table.name;
  ctx.column_name = col.name;
  ctx.data_type = col.data_type;
  for (const auto& c : table.columns) {
    ctx.sample_header.push_back(c.name);
    if (c.id != column) ctx.neighbor_columns.push_back(c.name);
  }
  ctx.sample_rows = data.sample_rows(column.table, 5);
  return ctx;
}

std::vector<ColumnId> ScreeningResult::flagged() const {
  std::vector<ColumnId> out;
  for (const auto& v : verdicts)
    if (v.flagged) out.push_back(v.column);
  return out;
}

std::size_t ScreeningResult::unflagged_count() const {
  return static_cast<std::size_t>(std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return !v.flagged; }));
}

ScreeningResult screen(const SchemaModel& schema, Screener& screener, const DataSource& data, std::size_t parallelism) {
  ScreeningResult result;
  result.excluded = structural_exclusions(schema);
  std::vector<ColumnId> eligible;
  for (ColumnId id : schema.column_ids()) {
    const bool excluded = std::any_of(result.excluded.begin(), result.excluded.end(),
                                      [&](const Exclusion& e) { return e.column == id; });
    if (!excluded) eligible.push_back(id);
  }
  result.verdicts.resize(eligible.size());
  parallel_for(eligible.size(), parallelism, [&](std::size_t i, std::size_t) {
    const ColumnId id = eligible[i];
    auto answer = screener.assess(build_screening_context(schema, id, data));
    result.verdicts[i] = {id, schema.qualified_name(id), answer.answered ? answer.flagged : true, answer.reason,
                          screener.id()};
  });
  return result;
}

}  // namespace schemaref
