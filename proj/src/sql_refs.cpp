#include "schemaref/sql_refs.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <optional>

#include "schemaref/error.hpp"
#include "schemaref/identifier.hpp"
#include "schemaref/log.hpp"

namespace schemaref::sql {

namespace {

constexpr std::array kNeverColumns = {
    "select", "from",   "where",   "group",     "by",     "order", "having", "limit",   "offset", "join",
    "on",     "using",  "as",      "and",       "or",     "not",   "in",     "is",      "null",   "like",
    "between", "case",  "when",    "then",      "else",   "end",   "distinct", "all",   "union",  "intersect",
    "except", "inner",  "left",    "right",     "outer",  "cross", "natural", "asc",    "desc",   "exists",
    "with",   "cast",   "recursive", "values",  "glob",   "escape"};

constexpr std::array kClauseEnders = {"where", "group", "having", "order", "limit", "window",
                                      "union", "intersect", "except", "select"};

constexpr std::array kAliasStoppers = {"where", "group", "having", "order", "limit", "window", "union",
                                       "intersect", "except", "on", "using", "join", "inner", "left",
                                       "right", "full", "cross", "natural", "outer", "select", "as",
                                       "indexed", "not", "set", "returning", "values"};

template <std::size_t N>
bool word_in(const Token& t, const std::array<const char*, N>& words) {
  if (t.kind != TokenKind::Word) return false;
  return std::any_of(words.begin(), words.end(), [&](const char* w) { return iequals(t.text, w); });
}

bool starts_block(const Token& t) { return t.is_keyword("select") || t.is_keyword("with") || t.is_keyword("values"); }

struct Binding {
  std::string alias;               // lowercased name visible to qualifiers
  std::optional<std::size_t> table;  // empty for derived tables and CTEs
};

struct Block {
  std::optional<std::size_t> parent;
  std::vector<Binding> bindings;
};

class Analyzer {
public:
  Analyzer(std::string_view sql, const SchemaModel& schema) : schema_(schema) {
    result_.tokens = tokenize(sql);
    for (std::size_t i = 0; i < result_.tokens.size(); ++i)
      if (!result_.tokens[i].trivia()) sig_.push_back(i);
    consumed_.assign(sig_.size(), false);
    block_of_.assign(sig_.size(), 0);
  }

  QueryAnalysis run() {
    bind_blocks();
    resolve_references();
    return std::move(result_);
  }

private:
  const Token& tok(std::size_t j) const { return result_.tokens[sig_[j]]; }
  bool has(std::size_t j) const { return j < sig_.size(); }

  void bind_blocks() {
    blocks_.push_back(Block{});
    std::size_t current = 0;
    struct Paren {
      bool opens_block;
      std::size_t saved_block;
      bool from_item;
      int depth_in_block;
    };
    std::vector<Paren> parens;
    std::vector<int> depth{0};   // non-block paren nesting per open block
    std::vector<bool> in_from{false};

    for (std::size_t j = 0; j < sig_.size(); ++j) {
      block_of_[j] = current;
      const Token& t = tok(j);
      if (t.is_punct("(")) {
        const bool opens = has(j + 1) && starts_block(tok(j + 1));
        const bool from_item = in_from.back() && depth.back() == 0 && j > 0 &&
                               (tok(j - 1).is_keyword("from") || tok(j - 1).is_keyword("join") ||
                                tok(j - 1).is_punct(","));
        parens.push_back({opens, current, from_item, depth.back()});
        if (opens) {
          blocks_.push_back(Block{current, {}});
          current = blocks_.size() - 1;
          depth.push_back(0);
          in_from.push_back(false);
        } else {
          ++depth.back();
        }
        continue;
      }
      if (t.is_punct(")")) {
        if (parens.empty()) continue;
        Paren p = parens.back();
        parens.pop_back();
        if (p.opens_block) {
          current = p.saved_block;
          depth.pop_back();
          in_from.pop_back();
        } else if (depth.back() > 0) {
          --depth.back();
        }
        if (p.from_item) j = bind_alias(j + 1, current, std::nullopt) - 1;
        continue;
      }
      if (t.kind != TokenKind::Word && t.kind != TokenKind::QuotedIdent && !t.is_punct(",")) continue;

      if (t.is_keyword("union") || t.is_keyword("intersect") || t.is_keyword("except")) {
        if (depth.back() == 0) {
          auto parent = blocks_[current].parent;
          blocks_.push_back(Block{parent, {}});
          current = blocks_.size() - 1;
          block_of_[j] = current;
        }
        in_from.back() = false;
        continue;
      }
      if (t.kind == TokenKind::Word && word_in(t, kClauseEnders) && depth.back() == 0) {
        in_from.back() = false;
        continue;
      }
      if (t.is_keyword("from") && depth.back() == 0) {
        in_from.back() = true;
        j = bind_table_ref(j + 1, current) - 1;
        continue;
      }
      if (t.is_keyword("join")) {
        in_from.back() = true;
        j = bind_table_ref(j + 1, current) - 1;
        continue;
      }
      if (t.is_punct(",") && in_from.back() && depth.back() == 0) {
        j = bind_table_ref(j + 1, current) - 1;
        continue;
      }
      if (t.is_ident()) mark_cte_or_alias(j);
    }
  }

  // CTE definitions (`name AS (`, `name(cols) AS (`) and `AS alias` column
  // aliases are not column references.
  void mark_cte_or_alias(std::size_t j) {
    if (consumed_[j]) return;
    if (j > 0 && tok(j - 1).is_keyword("as")) {
      consumed_[j] = true;
      return;
    }
    std::size_t k = j + 1;
    std::vector<std::size_t> column_list;
    if (has(k) && tok(k).is_punct("(")) {
      std::size_t m = k + 1;
      while (has(m) && !tok(m).is_punct(")")) {
        if (tok(m).is_ident()) column_list.push_back(m);
        ++m;
      }
      k = m + 1;
    }
    if (has(k + 1) && tok(k).is_keyword("as") && tok(k + 1).is_punct("(") && has(k + 2) && starts_block(tok(k + 2))) {
      ctes_.push_back(to_lower(tok(j).value));
      consumed_[j] = true;
      for (auto m : column_list) consumed_[m] = true;
    }
  }

  std::size_t bind_table_ref(std::size_t j, std::size_t block) {
    if (!has(j) || !tok(j).is_ident() || word_in(tok(j), kNeverColumns)) return j;
    std::size_t name_at = j;
    consumed_[j] = true;
    if (has(j + 2) && tok(j + 1).is_punct(".") && tok(j + 2).is_ident()) {
      name_at = j + 2;
      consumed_[j + 2] = true;
      j += 2;
    }
    const std::string name = to_lower(tok(name_at).value);
    std::optional<std::size_t> table;
    if (std::find(ctes_.begin(), ctes_.end(), name) == ctes_.end()) table = schema_.find_table(name);
    std::size_t next = j + 1;
    if (has(next) && tok(next).is_punct("(")) {
      // table-valued function: not a schema table
      table.reset();
      int d = 0;
      for (; has(next); ++next) {
        if (tok(next).is_punct("(")) ++d;
        if (tok(next).is_punct(")") && --d == 0) break;
      }
      ++next;
    }
    blocks_[block].bindings.push_back({name, table});
    return bind_alias(next, block, table);
  }

  std::size_t bind_alias(std::size_t j, std::size_t block, std::optional<std::size_t> table) {
    if (!has(j)) return j;
    if (tok(j).is_keyword("as") && has(j + 1) && tok(j + 1).is_ident()) {
      consumed_[j + 1] = true;
      blocks_[block].bindings.push_back({to_lower(tok(j + 1).value), table});
      return j + 2;
    }
    if (tok(j).is_ident() && !word_in(tok(j), kAliasStoppers) && !word_in(tok(j), kNeverColumns)) {
      consumed_[j] = true;
      blocks_[block].bindings.push_back({to_lower(tok(j).value), table});
      return j + 1;
    }
    return j;
  }

  std::optional<std::optional<std::size_t>> lookup_qualifier(std::size_t block, const std::string& q) const {
    for (std::optional<std::size_t> b = block; b; b = blocks_[*b].parent)
      for (const auto& binding : blocks_[*b].bindings)
        if (binding.alias == q) return binding.table;
    if (auto t = schema_.find_table(q)) return std::optional<std::size_t>(*t);
    return std::nullopt;
  }

  std::vector<ColumnId> lookup_unqualified(std::size_t block, const std::string& name) const {
    for (std::optional<std::size_t> b = block; b; b = blocks_[*b].parent) {
      std::vector<ColumnId> found;
      for (const auto& binding : blocks_[*b].bindings) {
        if (!binding.table) continue;
        if (auto c = schema_.find_column(schema_.tables()[*binding.table].name, name))
          if (std::find(found.begin(), found.end(), *c) == found.end()) found.push_back(*c);
      }
      if (!found.empty()) return found;
    }
    return {};
  }

  void add_table_columns(std::size_t table) {
    for (const auto& c : schema_.tables()[table].columns) result_.star_columns.insert(c.id);
  }

  void resolve_references() {
    for (std::size_t j = 0; j < sig_.size(); ++j) {
      const Token& t = tok(j);
      if (t.is_punct("*")) {
        resolve_star(j);
        continue;
      }
      if (!t.is_ident() || consumed_[j]) continue;
      if (j > 0 && tok(j - 1).is_punct(".")) continue;
      if (has(j + 1) && tok(j + 1).is_punct(".")) {
        j = resolve_qualified(j);
        continue;
      }
      if (has(j + 1) && tok(j + 1).is_punct("(")) continue;
      if (t.kind == TokenKind::Word && word_in(t, kNeverColumns)) continue;
      auto cols = lookup_unqualified(block_of_[j], t.value);
      if (cols.empty()) continue;
      if (cols.size() > 1) {
        std::string msg = "ambiguous reference '" + t.value + "' at offset " + std::to_string(t.offset) +
                          " attributed to " + std::to_string(cols.size()) + " columns";
        result_.warnings.push_back(msg);
        log::debug(msg);
      }
      result_.references.push_back({sig_[j], std::move(cols), false});
    }
  }

  // Handles `q.col`, `schema.q.col`, and `q.*`; returns the last index used.
  std::size_t resolve_qualified(std::size_t j) {
    std::size_t q = j;
    std::size_t col = j + 2;
    if (has(j + 4) && tok(j + 3).is_punct(".") && (tok(j + 4).is_ident() || tok(j + 4).is_punct("*"))) {
      q = j + 2;
      col = j + 4;
    }
    if (!has(col)) return col;
    auto table = lookup_qualifier(block_of_[j], to_lower(tok(q).value));
    if (tok(col).is_punct("*")) {
      if (table && *table) add_table_columns(**table);
      return col;
    }
    if (!tok(col).is_ident()) return col;
    if (table && *table) {
      if (auto c = schema_.find_column(schema_.tables()[**table].name, tok(col).value))
        result_.references.push_back({sig_[col], {*c}, true});
    }
    return col;
  }

  void resolve_star(std::size_t j) {
    if (j == 0) return;
    const Token& prev = tok(j - 1);
    if (prev.is_punct(".")) return;  // handled by resolve_qualified
    if (!(prev.is_keyword("select") || prev.is_keyword("distinct") || prev.is_keyword("all") || prev.is_punct(",")))
      return;
    for (const auto& binding : blocks_[block_of_[j]].bindings)
      if (binding.table) add_table_columns(*binding.table);
  }

  const SchemaModel& schema_;
  QueryAnalysis result_;
  std::vector<std::size_t> sig_;
  std::vector<bool> consumed_;
  std::vector<std::size_t> block_of_;
  std::vector<Block> blocks_;
  std::vector<std::string> ctes_;
};

}  // namespace

QueryAnalysis analyze_query(std::string_view sql, const SchemaModel& schema) { return Analyzer(sql, schema).run(); }

std::set<ColumnId> extract_columns(std::string_view sql, const SchemaModel& schema) {
  auto analysis = analyze_query(sql, schema);
  std::set<ColumnId> out = analysis.star_columns;
  for (const auto& ref : analysis.references) out.insert(ref.columns.begin(), ref.columns.end());
  return out;
}

std::string rewrite_identifiers(std::string_view sql, const RefinementMapping& mapping, const SchemaModel& schema) {
  if (mapping.empty()) return std::string(sql);
  auto analysis = analyze_query(sql, schema);
  std::map<std::size_t, std::string> replacement;
  for (const auto& ref : analysis.references) {
    const std::string& first = mapping.name_of(schema, ref.columns.front());
    bool changed = false;
    for (ColumnId c : ref.columns) {
      const std::string& final_name = mapping.name_of(schema, c);
      if (final_name != first) {
        const auto& t = analysis.tokens[ref.token];
        throw Error("reference '" + t.value + "' at offset " + std::to_string(t.offset) +
                    " resolves to columns with different refined names (" + schema.qualified_name(ref.columns.front()) +
                    ", " + schema.qualified_name(c) + ")");
      }
      if (final_name != schema.column(c).name) changed = true;
    }
    if (!changed) continue;
    const auto& t = analysis.tokens[ref.token];
    if (t.kind == TokenKind::QuotedIdent) {
      const char open = t.text.front();
      const char close = open == '[' ? ']' : open;
      std::string q(1, open);
      for (char c : first) {
        if (c == close && close != ']') q += c;
        q += c;
      }
      q += close;
      replacement[ref.token] = q;
    } else {
      replacement[ref.token] = quote_identifier(first);
    }
  }
  std::string out;
  out.reserve(sql.size());
  for (std::size_t i = 0; i < analysis.tokens.size(); ++i) {
    auto it = replacement.find(i);
    out += it == replacement.end() ? analysis.tokens[i].text : it->second;
  }
  return out;
}

bool has_top_level_order_by(std::string_view sql) {
  auto toks = significant(tokenize(sql));
  int depth = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].is_punct("(")) ++depth;
    else if (toks[i].is_punct(")")) --depth;
    else if (depth == 0 && toks[i].is_keyword("order") && i + 1 < toks.size() && toks[i + 1].is_keyword("by"))
      return true;
  }
  return false;
}

std::string leading_keyword(std::string_view sql) {
  for (const auto& t : tokenize(sql)) {
    if (t.trivia() || t.is_punct("(")) continue;
    return t.kind == TokenKind::Word ? to_lower(t.text) : std::string();
  }
  return {};
}

}  // namespace schemaref::sql
