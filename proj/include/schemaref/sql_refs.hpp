#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "schemaref/schema.hpp"
#include "schemaref/sql_lexer.hpp"

namespace schemaref::sql {

/// One identifier token that names a schema column. `columns` holds more
/// than one entry when an unqualified name matches several tables in scope.
struct ColumnReference {
  std::size_t token;  ///< index into QueryAnalysis::tokens
  std::vector<ColumnId> columns;
  bool qualified = false;
};

/// Token-level reference analysis: FROM/JOIN bindings and aliases are
/// resolved per SELECT block (subqueries nest, compound members are
/// siblings), unqualified names resolve innermost block first.
struct QueryAnalysis {
  std::vector<Token> tokens;
  std::vector<ColumnReference> references;
  std::set<ColumnId> star_columns;  ///< expanded from `*` and `t.*`
  std::vector<std::string> warnings;
};

QueryAnalysis analyze_query(std::string_view sql, const SchemaModel& schema);

/// Every schema column the query references; `*` expands to the starred
/// tables' columns and ambiguous names attribute to every match.
std::set<ColumnId> extract_columns(std::string_view sql, const SchemaModel& schema);

/// Replaces each token resolving to a renamed column with its new name.
/// Literals and comments are untouched; an identity mapping returns the input
/// byte for byte. Throws when one token resolves to columns whose final
/// names differ.
std::string rewrite_identifiers(std::string_view sql, const RefinementMapping& mapping, const SchemaModel& schema);

/// True when an ORDER BY appears outside every parenthesis.
bool has_top_level_order_by(std::string_view sql);

/// First keyword of the statement, lowercased; empty if none.
std::string leading_keyword(std::string_view sql);

}  // namespace schemaref::sql
