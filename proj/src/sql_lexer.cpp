#include "schemaref/sql_lexer.hpp"

#include <cctype>

#include "schemaref/error.hpp"
#include "schemaref/identifier.hpp"

namespace schemaref::sql {

bool Token::is_keyword(std::string_view kw) const { return kind == TokenKind::Word && iequals(text, kw); }

namespace {

bool word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80; }
bool word_char(char c) { return word_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '$'; }

/// Scans a quoted run starting at `i` (the opening quote) where the closing
/// quote is escaped by doubling. Returns one past the closing quote.
std::size_t scan_quoted(std::string_view s, std::size_t i, char close) {
  std::size_t j = i + 1;
  while (j < s.size()) {
    if (s[j] == close) {
      if (close != ']' && j + 1 < s.size() && s[j + 1] == close) {
        j += 2;
        continue;
      }
      return j + 1;
    }
    ++j;
  }
  throw Error("unterminated quoted token at offset " + std::to_string(i));
}

std::string unquote(std::string_view raw) {
  const char close = raw.front() == '[' ? ']' : raw.front();
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    out += raw[i];
    if (close != ']' && raw[i] == close && i + 2 < raw.size() && raw[i + 1] == close) ++i;
  }
  return out;
}

}  // namespace

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto push = [&](TokenKind kind, std::size_t end) {
    Token t{kind, i, end - i, std::string(s.substr(i, end - i)), {}};
    t.value = kind == TokenKind::QuotedIdent ? unquote(t.text) : t.text;
    out.push_back(std::move(t));
    i = end;
  };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      push(TokenKind::Whitespace, j);
    } else if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
      std::size_t j = s.find('\n', i);
      push(TokenKind::Comment, j == std::string_view::npos ? s.size() : j);
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      std::size_t j = s.find("*/", i + 2);
      if (j == std::string_view::npos) throw Error("unterminated block comment at offset " + std::to_string(i));
      push(TokenKind::Comment, j + 2);
    } else if (c == '\'') {
      push(TokenKind::String, scan_quoted(s, i, '\''));
    } else if (c == '"' || c == '`') {
      push(TokenKind::QuotedIdent, scan_quoted(s, i, c));
    } else if (c == '[') {
      push(TokenKind::QuotedIdent, scan_quoted(s, i, ']'));
    } else if ((c == 'x' || c == 'X') && i + 1 < s.size() && s[i + 1] == '\'') {
      // blob literal
      std::size_t end = scan_quoted(s, i + 1, '\'');
      push(TokenKind::String, end);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '.' || s[j] == '_' ||
                              ((s[j] == '+' || s[j] == '-') && (s[j - 1] == 'e' || s[j - 1] == 'E'))))
        ++j;
      push(TokenKind::Number, j);
    } else if (word_start(c)) {
      std::size_t j = i;
      while (j < s.size() && word_char(s[j])) ++j;
      push(TokenKind::Word, j);
    } else {
      static constexpr std::string_view two[] = {"<=", ">=", "<>", "!=", "==", "||", "<<", ">>"};
      std::size_t len = 1;
      for (auto op : two)
        if (s.substr(i, 2) == op) len = 2;
      push(TokenKind::Punct, i + len);
    }
  }
  return out;
}

std::vector<Token> significant(const std::vector<Token>& tokens) {
  std::vector<Token> out;
  for (const auto& t : tokens)
    if (!t.trivia()) out.push_back(t);
  return out;
}

}  // namespace schemaref::sql
