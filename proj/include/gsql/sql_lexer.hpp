#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gsql {

enum class TokenKind {
  kWord,              // bare identifier or keyword
  kQuotedIdentifier,  // "x", `x` or [x]
  kNumber,
  kString,            // 'x'
  kSymbol,
  kEnd,
};

struct SqlToken {
  TokenKind kind = TokenKind::kEnd;
  std::string text;  // unescaped value for strings and quoted identifiers
  std::string raw;   // exact source spelling
  size_t offset = 0;

  bool is_keyword(std::string_view upper) const;
  bool is_symbol(std::string_view symbol) const {
    return kind == TokenKind::kSymbol && text == symbol;
  }
};

// Always ends with a kEnd token. Throws SyntaxError on malformed input.
std::vector<SqlToken> lex_sql(std::string_view sql);

// Whitespace + SQL punctuation split used by the reference scorer. Quoted
// literals stay one token. Never throws; falls back to whitespace splitting.
std::vector<std::string> tokenize_sql(std::string_view sql);
std::string detokenize_sql(std::span<const std::string> tokens);

// True iff the statement has an ORDER BY outside any parentheses.
bool has_top_level_order_by(std::string_view sql);

}  // namespace gsql
