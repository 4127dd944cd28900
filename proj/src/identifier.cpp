#include "schemaref/identifier.hpp"

#include <sqlite3.h>

#include <cctype>

namespace schemaref {

namespace {
bool is_word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
}  // namespace

bool is_plain_identifier(std::string_view name) {
  if (name.empty() || !is_word_start(name.front())) return false;
  for (char c : name)
    if (!is_word_char(c)) return false;
  return true;
}

bool is_sql_keyword(std::string_view name) {
  return sqlite3_keyword_check(name.data(), static_cast<int>(name.size())) != 0;
}

std::string quote_identifier(std::string_view name) {
  if (is_plain_identifier(name) && !is_sql_keyword(name)) return std::string(name);
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string quote_literal(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

std::string normalize_candidate(std::string_view raw) {
  std::string out;
  bool pending_sep = false;
  char prev = '\0';
  for (char c : raw) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc) || c == '-' || c == '_' || c == '.') {
      pending_sep = true;
    } else if (std::isalnum(uc)) {
      // camelCase boundary: lower/digit followed by upper
      if (std::isupper(uc) && (std::islower(static_cast<unsigned char>(prev)) ||
                               std::isdigit(static_cast<unsigned char>(prev))))
        pending_sep = true;
      if (pending_sep && !out.empty()) out += '_';
      pending_sep = false;
      out += static_cast<char>(std::tolower(uc));
    }
    prev = c;
  }
  if (!out.empty() && std::isdigit(static_cast<unsigned char>(out.front()))) out.insert(out.begin(), '_');
  return out;
}

}  // namespace schemaref
