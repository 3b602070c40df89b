#include "gsql/sql_lexer.hpp"

#include <cctype>
#include <sstream>

#include "gsql/errors.hpp"

namespace gsql {

namespace {

bool is_word_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

bool SqlToken::is_keyword(std::string_view upper) const {
  if (kind != TokenKind::kWord || text.size() != upper.size()) return false;
  for (size_t i = 0; i < text.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(text[i])) != upper[i]) return false;
  }
  return true;
}

std::vector<SqlToken> lex_sql(std::string_view sql) {
  std::vector<SqlToken> tokens;
  size_t i = 0;
  const size_t n = sql.size();
  while (i < n) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    SqlToken token;
    token.offset = i;
    if (is_word_start(c)) {
      size_t j = i + 1;
      while (j < n && is_word_char(sql[j])) ++j;
      token.kind = TokenKind::kWord;
      token.text = std::string(sql.substr(i, j - i));
      token.raw = token.text;
      i = j;
    } else if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(sql[i + 1]))) {
      size_t j = i;
      while (j < n && is_digit(sql[j])) ++j;
      if (j < n && sql[j] == '.') {
        ++j;
        while (j < n && is_digit(sql[j])) ++j;
      }
      if (j < n && (sql[j] == 'e' || sql[j] == 'E')) {
        size_t k = j + 1;
        if (k < n && (sql[k] == '+' || sql[k] == '-')) ++k;
        if (k < n && is_digit(sql[k])) {
          j = k;
          while (j < n && is_digit(sql[j])) ++j;
        }
      }
      if (j < n && is_word_start(sql[j])) {
        throw SyntaxError("malformed number at offset " + std::to_string(i));
      }
      token.kind = TokenKind::kNumber;
      token.text = std::string(sql.substr(i, j - i));
      token.raw = token.text;
      i = j;
    } else if (c == '\'' || c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      std::string value;
      size_t j = i + 1;
      bool closed = false;
      while (j < n) {
        if (sql[j] == close) {
          if (close != ']' && j + 1 < n && sql[j + 1] == close) {
            value.push_back(close);
            j += 2;
            continue;
          }
          closed = true;
          ++j;
          break;
        }
        value.push_back(sql[j]);
        ++j;
      }
      if (!closed) {
        throw SyntaxError("unterminated quote at offset " + std::to_string(i));
      }
      token.kind = c == '\'' ? TokenKind::kString : TokenKind::kQuotedIdentifier;
      token.text = std::move(value);
      token.raw = std::string(sql.substr(i, j - i));
      i = j;
    } else {
      static constexpr std::string_view kTwoChar[] = {"<=", ">=", "<>", "!=", "==",
                                                      "||"};
      token.kind = TokenKind::kSymbol;
      for (auto sym : kTwoChar) {
        if (sql.substr(i, 2) == sym) token.text = std::string(sym);
      }
      if (token.text.empty()) {
        static constexpr std::string_view kOneChar = "(),.*;=<>+-/%";
        if (kOneChar.find(c) == std::string_view::npos) {
          throw SyntaxError(std::string("unexpected character '") + c +
                            "' at offset " + std::to_string(i));
        }
        token.text = std::string(1, c);
      }
      token.raw = token.text;
      i += token.text.size();
    }
    tokens.push_back(std::move(token));
  }
  SqlToken end;
  end.kind = TokenKind::kEnd;
  end.offset = n;
  tokens.push_back(end);
  return tokens;
}

std::vector<std::string> tokenize_sql(std::string_view sql) {
  std::vector<std::string> out;
  try {
    for (const auto& token : lex_sql(sql)) {
      if (token.kind != TokenKind::kEnd) out.push_back(token.raw);
    }
  } catch (const SyntaxError&) {
    out.clear();
    std::istringstream in{std::string(sql)};
    std::string word;
    while (in >> word) out.push_back(word);
  }
  return out;
}

std::string detokenize_sql(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& token : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

bool has_top_level_order_by(std::string_view sql) {
  std::vector<SqlToken> tokens;
  try {
    tokens = lex_sql(sql);
  } catch (const SyntaxError&) {
    return false;
  }
  int depth = 0;
  for (size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].is_symbol("(")) ++depth;
    if (tokens[i].is_symbol(")")) --depth;
    if (depth == 0 && tokens[i].is_keyword("ORDER") && tokens[i + 1].is_keyword("BY")) {
      return true;
    }
  }
  return false;
}

}  // namespace gsql
