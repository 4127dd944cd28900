#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace schemaref::sql {

enum class TokenKind {
  Word,            ///< bare identifier or keyword
  QuotedIdent,     ///< "x", `x` or [x]
  String,          ///< 'x'
  Number,
  Punct,           ///< operators and punctuation, one token per symbol
  Comment,
  Whitespace,
};

struct Token {
  TokenKind kind;
  std::size_t offset;
  std::size_t length;
  std::string text;   ///< raw source text
  std::string value;  ///< identifier value with quotes removed; raw text otherwise

  bool is_ident() const { return kind == TokenKind::Word || kind == TokenKind::QuotedIdent; }
  bool is_keyword(std::string_view kw) const;
  bool is_punct(std::string_view p) const { return kind == TokenKind::Punct && text == p; }
  bool trivia() const { return kind == TokenKind::Comment || kind == TokenKind::Whitespace; }
};

/// Lossless tokenization: concatenating every token's text reproduces the
/// input. Throws schemaref::Error on an unterminated string, quoted
/// identifier, or block comment.
std::vector<Token> tokenize(std::string_view sql);

/// Tokens with whitespace and comments removed.
std::vector<Token> significant(const std::vector<Token>& tokens);

}  // namespace schemaref::sql
