#pragma once

#include <string>
#include <string_view>

namespace schemaref {

/// True for `[A-Za-z_][A-Za-z0-9_]*`.
bool is_plain_identifier(std::string_view name);

/// True when the SQLite tokenizer treats `name` as a keyword.
bool is_sql_keyword(std::string_view name);

/// Emits `name` bare when it is a plain, non-keyword identifier and
/// double-quoted (with embedded quotes doubled) otherwise.
std::string quote_identifier(std::string_view name);

/// Single-quoted SQL string literal.
std::string quote_literal(std::string_view text);

std::string to_lower(std::string_view s);

/// ASCII case-insensitive equality; SQLite identifier semantics.
bool iequals(std::string_view a, std::string_view b);

/// Lowercases, trims, turns whitespace/hyphen runs into a single underscore,
/// splits camelCase, and strips characters that cannot appear in a plain
/// identifier. Returns an empty string when nothing usable remains.
std::string normalize_candidate(std::string_view raw);

}  // namespace schemaref
