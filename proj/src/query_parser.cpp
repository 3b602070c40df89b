#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <limits>

#include "gsql/query_model.hpp"
#include "gsql/sql_lexer.hpp"

namespace gsql {

namespace {

constexpr int kMaxNestingDepth = 1;

struct RawColumn {
  std::string qualifier;
  std::string name;
  bool star = false;
};

struct RawValue {
  Aggregator agg = Aggregator::kNone;
  RawColumn column;
  bool distinct = false;
};

struct ScopeEntry {
  std::string table;
  std::string alias;  // lower-case; empty when unaliased
  int instance = 0;
};

struct Scope {
  std::vector<ScopeEntry> entries;
  const Scope* parent = nullptr;
};

bool is_clause_keyword(const SqlToken& t) {
  static constexpr std::string_view kWords[] = {
      "SELECT", "FROM",   "WHERE",  "GROUP",   "ORDER",  "HAVING",    "LIMIT",
      "UNION",  "EXCEPT", "INTERSECT", "JOIN", "INNER",  "LEFT",      "RIGHT",
      "FULL",   "OUTER",  "CROSS",  "NATURAL", "ON",     "AS",        "AND",
      "OR",     "NOT",    "IN",     "LIKE",    "BETWEEN", "IS",       "ASC",
      "DESC",   "BY",     "DISTINCT", "OFFSET", "USING", "ALL"};
  for (auto w : kWords) {
    if (t.is_keyword(w)) return true;
  }
  return false;
}

std::optional<Aggregator> aggregator_from(const SqlToken& t) {
  if (t.is_keyword("COUNT")) return Aggregator::kCount;
  if (t.is_keyword("SUM")) return Aggregator::kSum;
  if (t.is_keyword("AVG")) return Aggregator::kAvg;
  if (t.is_keyword("MIN")) return Aggregator::kMin;
  if (t.is_keyword("MAX")) return Aggregator::kMax;
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::string_view sql, const Schema& schema)
      : tokens_(lex_sql(sql)), schema_(schema) {}

  Query parse_statement() {
    Query query = parse_query(0, nullptr);
    if (peek().is_symbol(";")) advance();
    if (peek().kind != TokenKind::kEnd) {
      fail_syntax("unexpected '" + peek().raw + "'");
    }
    normalize(query);
    return query;
  }

 private:
  const SqlToken& peek(size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const SqlToken& advance() {
    const SqlToken& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool accept_keyword(std::string_view kw) {
    if (peek().is_keyword(kw)) {
      advance();
      return true;
    }
    return false;
  }
  bool accept_symbol(std::string_view sym) {
    if (peek().is_symbol(sym)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail_syntax("expected " + std::string(kw));
  }
  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) fail_syntax("expected '" + std::string(sym) + "'");
  }
  [[noreturn]] void fail_syntax(const std::string& what) const {
    throw SyntaxError(what + " at offset " + std::to_string(peek().offset));
  }

  Query parse_query(int depth, const Scope* parent) {
    if (depth > kMaxNestingDepth) {
      throw UnsupportedFeature("subquery nesting deeper than one level");
    }
    Query query;
    Scope first_scope;
    query.core = parse_core(depth, parent, first_scope);
    while (true) {
      std::optional<SetOp> op;
      if (accept_keyword("UNION")) op = SetOp::kUnion;
      else if (accept_keyword("INTERSECT")) op = SetOp::kIntersect;
      else if (accept_keyword("EXCEPT")) op = SetOp::kExcept;
      if (!op) break;
      if (peek().is_keyword("ALL")) throw UnsupportedFeature("UNION ALL");
      Scope scope;
      query.compound.emplace_back(*op, parse_core(depth, parent, scope));
    }
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      do {
        OrderItem item;
        RawValue raw = parse_raw_value();
        item.expr = query.compound.empty() ? resolve_value(raw, first_scope)
                                           : resolve_compound_order(raw, query, first_scope);
        if (accept_keyword("DESC")) item.descending = true;
        else accept_keyword("ASC");
        query.order_by.push_back(std::move(item));
      } while (accept_symbol(","));
    }
    if (accept_keyword("LIMIT")) {
      const SqlToken& t = advance();
      if (t.kind != TokenKind::kNumber) fail_syntax("expected LIMIT count");
      std::int64_t n = 0;
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
        throw SyntaxError("LIMIT expects an integer");
      }
      query.limit = n;
      if (peek().is_keyword("OFFSET") || peek().is_symbol(",")) {
        throw UnsupportedFeature("LIMIT with OFFSET");
      }
    }
    return query;
  }

  // Compound ORDER BY terms name result columns, so match them against the
  // first core's select list before falling back to its FROM scope.
  ValueExpr resolve_compound_order(const RawValue& raw, const Query& query,
                                   const Scope& scope) const {
    if (raw.column.qualifier.empty() && !raw.column.star) {
      for (const auto& item : query.core.items) {
        if (item.agg == raw.agg && item.distinct == raw.distinct &&
            item.column.column == raw.column.name) {
          return item;
        }
      }
    }
    return resolve_value(raw, scope);
  }

  SelectCore parse_core(int depth, const Scope* parent, Scope& scope) {
    expect_keyword("SELECT");
    SelectCore core;
    if (accept_keyword("DISTINCT")) core.distinct = true;
    else accept_keyword("ALL");
    std::vector<RawValue> raw_items;
    do {
      raw_items.push_back(parse_raw_value());
      if (accept_keyword("AS")) {
        const SqlToken& alias = advance();
        if (alias.kind != TokenKind::kWord && alias.kind != TokenKind::kQuotedIdentifier) {
          fail_syntax("expected column alias");
        }
      }
    } while (accept_symbol(","));

    scope.parent = parent;
    expect_keyword("FROM");
    parse_from(core, scope, depth);

    for (const auto& raw : raw_items) core.items.push_back(resolve_value(raw, scope));

    if (accept_keyword("WHERE")) core.where = parse_predicate(scope, depth);
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      do {
        RawValue raw = parse_raw_value();
        if (raw.agg != Aggregator::kNone || raw.column.star) {
          throw UnsupportedFeature("GROUP BY expression");
        }
        core.group_by.push_back(resolve_column(raw.column, scope));
      } while (accept_symbol(","));
    }
    if (accept_keyword("HAVING")) core.having = parse_predicate(scope, depth);
    return core;
  }

  void parse_from(SelectCore& core, Scope& scope, int depth) {
    auto add_table = [&]() {
      if (peek().is_symbol("(")) throw UnsupportedFeature("subquery in FROM");
      const SqlToken& name = advance();
      if (name.kind != TokenKind::kWord && name.kind != TokenKind::kQuotedIdentifier) {
        fail_syntax("expected table name");
      }
      const Table* table = schema_.find_table(name.text);
      if (!table) throw ResolutionError("unknown table '" + name.text + "'");
      ScopeEntry entry;
      entry.table = table->name;
      entry.instance = static_cast<int>(std::count_if(
          scope.entries.begin(), scope.entries.end(),
          [&](const ScopeEntry& e) { return e.table == table->name; }));
      if (accept_keyword("AS")) {
        const SqlToken& alias = advance();
        if (alias.kind != TokenKind::kWord && alias.kind != TokenKind::kQuotedIdentifier) {
          fail_syntax("expected table alias");
        }
        entry.alias = to_lower(alias.text);
      } else if ((peek().kind == TokenKind::kWord && !is_clause_keyword(peek())) ||
                 peek().kind == TokenKind::kQuotedIdentifier) {
        entry.alias = to_lower(advance().text);
      }
      for (const auto& e : scope.entries) {
        if (!entry.alias.empty() && e.alias == entry.alias) {
          throw ResolutionError("duplicate alias '" + entry.alias + "'");
        }
      }
      scope.entries.push_back(entry);
      core.from.push_back(TableRef{entry.table, entry.instance});
      core.join_on.emplace_back();
    };

    add_table();
    while (true) {
      if (accept_symbol(",")) {
        add_table();
        continue;
      }
      if (peek().is_keyword("LEFT") || peek().is_keyword("RIGHT") ||
          peek().is_keyword("FULL") || peek().is_keyword("OUTER") ||
          peek().is_keyword("CROSS") || peek().is_keyword("NATURAL")) {
        throw UnsupportedFeature("outer/cross/natural join");
      }
      const bool inner = accept_keyword("INNER");
      if (!accept_keyword("JOIN")) {
        if (inner) fail_syntax("expected JOIN");
        break;
      }
      add_table();
      if (accept_keyword("ON")) {
        core.join_on.back() = parse_predicate(scope, depth);
      } else if (peek().is_keyword("USING")) {
        throw UnsupportedFeature("JOIN ... USING");
      }
    }
  }

  RawColumn parse_raw_column() {
    const SqlToken& first = advance();
    if (first.kind != TokenKind::kWord && first.kind != TokenKind::kQuotedIdentifier) {
      fail_syntax("expected column name");
    }
    if (first.kind == TokenKind::kWord && is_clause_keyword(first)) {
      fail_syntax("unexpected keyword '" + first.raw + "'");
    }
    RawColumn col;
    if (accept_symbol(".")) {
      col.qualifier = to_lower(first.text);
      if (accept_symbol("*")) throw UnsupportedFeature("qualified star");
      const SqlToken& second = advance();
      if (second.kind != TokenKind::kWord && second.kind != TokenKind::kQuotedIdentifier) {
        fail_syntax("expected column name after '.'");
      }
      col.name = to_lower(second.text);
    } else {
      col.name = to_lower(first.text);
    }
    return col;
  }

  RawValue parse_raw_value() {
    RawValue value;
    if (auto agg = aggregator_from(peek()); agg && peek(1).is_symbol("(")) {
      advance();
      advance();
      value.agg = *agg;
      if (accept_keyword("DISTINCT")) value.distinct = true;
      if (accept_symbol("*")) {
        value.column.star = true;
      } else {
        value.column = parse_raw_column();
      }
      expect_symbol(")");
    } else if (accept_symbol("*")) {
      value.column.star = true;
    } else if (peek().kind == TokenKind::kWord || peek().kind == TokenKind::kQuotedIdentifier) {
      value.column = parse_raw_column();
    } else if (peek().kind == TokenKind::kNumber || peek().kind == TokenKind::kString) {
      throw UnsupportedFeature("literal select item");
    } else {
      fail_syntax("expected expression");
    }
    if (peek().is_symbol("+") || peek().is_symbol("-") || peek().is_symbol("/") ||
        peek().is_symbol("*") || peek().is_symbol("%") || peek().is_symbol("||")) {
      throw UnsupportedFeature("arithmetic expression");
    }
    if (peek().is_symbol("(")) throw UnsupportedFeature("function call");
    return value;
  }

  std::optional<ColumnRef> lookup(const RawColumn& raw, const Scope& scope) const {
    std::vector<const ScopeEntry*> candidates;
    if (!raw.qualifier.empty()) {
      for (const auto& e : scope.entries) {
        if (e.alias == raw.qualifier) candidates.push_back(&e);
      }
      if (candidates.empty()) {
        for (const auto& e : scope.entries) {
          if (e.alias.empty() && e.table == raw.qualifier) candidates.push_back(&e);
        }
      }
      if (candidates.empty()) {
        for (const auto& e : scope.entries) {
          if (e.table == raw.qualifier) candidates.push_back(&e);
        }
        if (candidates.size() > 1) {
          throw ResolutionError("ambiguous qualifier '" + raw.qualifier + "'");
        }
      }
      if (!candidates.empty()) {
        const Table* table = schema_.find_table(candidates.front()->table);
        if (!table->find_column(raw.name)) {
          throw ResolutionError("unknown column '" + raw.qualifier + "." + raw.name + "'");
        }
        return ColumnRef{candidates.front()->table, raw.name, candidates.front()->instance};
      }
    } else {
      for (const auto& e : scope.entries) {
        if (schema_.find_table(e.table)->find_column(raw.name)) candidates.push_back(&e);
      }
      if (candidates.size() > 1) {
        throw ResolutionError("ambiguous column '" + raw.name + "'");
      }
      if (candidates.size() == 1) {
        return ColumnRef{candidates.front()->table, raw.name, candidates.front()->instance};
      }
    }
    if (scope.parent) return lookup(raw, *scope.parent);
    return std::nullopt;
  }

  ColumnRef resolve_column(const RawColumn& raw, const Scope& scope) const {
    if (raw.star) return ColumnRef::star();
    if (auto ref = lookup(raw, scope)) return *ref;
    throw ResolutionError("unknown column '" +
                          (raw.qualifier.empty() ? raw.name : raw.qualifier + "." + raw.name) +
                          "'");
  }

  ValueExpr resolve_value(const RawValue& raw, const Scope& scope) const {
    ValueExpr value;
    value.agg = raw.agg;
    value.distinct = raw.distinct;
    value.column = resolve_column(raw.column, scope);
    if (value.column.is_star()) {
      if (raw.agg != Aggregator::kNone && raw.agg != Aggregator::kCount) {
        throw ResolutionError(std::string(aggregator_name(raw.agg)) + "(*) is not valid");
      }
      if (raw.distinct) throw ResolutionError("count(DISTINCT *) is not valid");
    } else if (raw.agg == Aggregator::kSum || raw.agg == Aggregator::kAvg) {
      const Column* column = schema_.find_column(value.column.id());
      if (!is_numeric(column->type)) {
        throw ResolutionError(std::string(aggregator_name(raw.agg)) +
                              " over non-numeric column " + value.column.id().qualified());
      }
    }
    return value;
  }

  Literal parse_literal() {
    int sign = 1;
    if (accept_symbol("-")) sign = -1;
    else accept_symbol("+");
    const SqlToken& t = advance();
    if (t.kind == TokenKind::kString) {
      if (sign != 1) fail_syntax("sign before string literal");
      return Literal{t.text};
    }
    if (t.kind != TokenKind::kNumber) fail_syntax("expected literal");
    const bool is_real = t.text.find_first_of(".eE") != std::string::npos;
    if (!is_real) {
      std::int64_t n = 0;
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n);
      if (ec == std::errc() && ptr == t.text.data() + t.text.size()) {
        return Literal{sign * n};
      }
    }
    return Literal{sign * std::strtod(t.text.c_str(), nullptr)};
  }

  bool starts_literal() const {
    const SqlToken& t = peek();
    if (t.kind == TokenKind::kNumber || t.kind == TokenKind::kString) return true;
    return (t.is_symbol("-") || t.is_symbol("+")) && peek(1).kind == TokenKind::kNumber;
  }

  Literal typed_literal(const ValueExpr& lhs, Literal literal, CompareOp op) const {
    const ColumnType type = value_type(lhs, schema_);
    if (op == CompareOp::kLike || op == CompareOp::kNotLike) {
      if (!literal.is_string()) throw ResolutionError("LIKE expects a string pattern");
      if (is_numeric(type) && type != ColumnType::kBoolean) {
        throw ResolutionError("LIKE over numeric column");
      }
      return literal;
    }
    switch (type) {
      case ColumnType::kText:
        if (!literal.is_string()) {
          throw ResolutionError("numeric literal compared with text column " +
                                lhs.column.id().qualified());
        }
        break;
      case ColumnType::kInteger:
      case ColumnType::kReal:
        if (literal.is_string()) {
          throw ResolutionError("string literal compared with numeric column " +
                                lhs.column.id().qualified());
        }
        if (type == ColumnType::kReal && lhs.agg != Aggregator::kCount &&
            std::holds_alternative<std::int64_t>(literal.value)) {
          literal.value = static_cast<double>(std::get<std::int64_t>(literal.value));
        }
        break;
      case ColumnType::kBoolean:
      case ColumnType::kDateTime:
        break;
    }
    return literal;
  }

  Box<Query> parse_subquery(const Scope& scope, int depth) {
    Query sub = parse_query(depth + 1, &scope);
    expect_symbol(")");
    return Box<Query>(std::move(sub));
  }

  Predicate parse_predicate(const Scope& scope, int depth) {
    std::vector<Predicate> terms;
    terms.push_back(parse_conjunction(scope, depth));
    while (accept_keyword("OR")) terms.push_back(parse_conjunction(scope, depth));
    if (terms.size() == 1) return std::move(terms.front());
    return Predicate{Logical{LogicalOp::kOr, std::move(terms)}};
  }

  Predicate parse_conjunction(const Scope& scope, int depth) {
    std::vector<Predicate> terms;
    terms.push_back(parse_atom(scope, depth));
    while (accept_keyword("AND")) terms.push_back(parse_atom(scope, depth));
    if (terms.size() == 1) return std::move(terms.front());
    return Predicate{Logical{LogicalOp::kAnd, std::move(terms)}};
  }

  Predicate parse_atom(const Scope& scope, int depth) {
    if (peek().is_keyword("NOT")) throw UnsupportedFeature("NOT predicate");
    if (peek().is_keyword("EXISTS")) throw UnsupportedFeature("EXISTS");
    if (peek().is_symbol("(") && !peek(1).is_keyword("SELECT")) {
      advance();
      Predicate inner = parse_predicate(scope, depth);
      expect_symbol(")");
      return inner;
    }
    if (peek().is_symbol("(") || starts_literal()) {
      throw UnsupportedFeature("comparison must start with a column");
    }
    const ValueExpr lhs = resolve_value(parse_raw_value(), scope);
    if (lhs.column.is_star() && lhs.agg == Aggregator::kNone) {
      fail_syntax("'*' in predicate");
    }

    const bool negated = accept_keyword("NOT");
    if (accept_keyword("IN")) {
      expect_symbol("(");
      if (peek().is_keyword("SELECT")) {
        return Predicate{InSubquery{lhs, negated, parse_subquery(scope, depth)}};
      }
      std::vector<Predicate> alternatives;
      do {
        Literal lit = typed_literal(lhs, parse_literal(), CompareOp::kEq);
        alternatives.push_back(Predicate{
            Comparison{lhs, negated ? CompareOp::kNe : CompareOp::kEq, std::move(lit)}});
      } while (accept_symbol(","));
      expect_symbol(")");
      if (alternatives.size() == 1) return std::move(alternatives.front());
      return Predicate{Logical{negated ? LogicalOp::kAnd : LogicalOp::kOr,
                               std::move(alternatives)}};
    }
    if (accept_keyword("BETWEEN")) {
      Literal low = typed_literal(lhs, parse_literal(), CompareOp::kGe);
      expect_keyword("AND");
      Literal high = typed_literal(lhs, parse_literal(), CompareOp::kLe);
      std::vector<Predicate> parts;
      parts.push_back(Predicate{
          Comparison{lhs, negated ? CompareOp::kLt : CompareOp::kGe, std::move(low)}});
      parts.push_back(Predicate{
          Comparison{lhs, negated ? CompareOp::kGt : CompareOp::kLe, std::move(high)}});
      return Predicate{Logical{negated ? LogicalOp::kOr : LogicalOp::kAnd, std::move(parts)}};
    }
    if (accept_keyword("LIKE")) {
      const CompareOp op = negated ? CompareOp::kNotLike : CompareOp::kLike;
      Literal pattern = typed_literal(lhs, parse_literal(), op);
      return Predicate{Comparison{lhs, op, std::move(pattern)}};
    }
    if (negated) fail_syntax("expected IN, BETWEEN or LIKE after NOT");
    if (peek().is_keyword("IS")) throw UnsupportedFeature("IS [NOT] NULL");

    CompareOp op;
    const SqlToken& sym = advance();
    if (sym.is_symbol("=") || sym.is_symbol("==")) op = CompareOp::kEq;
    else if (sym.is_symbol("!=") || sym.is_symbol("<>")) op = CompareOp::kNe;
    else if (sym.is_symbol("<")) op = CompareOp::kLt;
    else if (sym.is_symbol("<=")) op = CompareOp::kLe;
    else if (sym.is_symbol(">")) op = CompareOp::kGt;
    else if (sym.is_symbol(">=")) op = CompareOp::kGe;
    else throw SyntaxError("expected comparison operator at offset " + std::to_string(sym.offset));

    Comparison cmp{lhs, op, Literal{std::int64_t{0}}};
    if (peek().is_symbol("(") && peek(1).is_keyword("SELECT")) {
      advance();
      cmp.rhs = parse_subquery(scope, depth);
    } else if (starts_literal()) {
      cmp.rhs = typed_literal(lhs, parse_literal(), op);
    } else if (peek().kind == TokenKind::kQuotedIdentifier && !peek(1).is_symbol(".")) {
      // SQLite reads an unresolvable "x" as a string literal.
      RawColumn raw{"", to_lower(peek().text), false};
      if (auto ref = lookup(raw, scope)) {
        advance();
        cmp.rhs = *ref;
      } else {
        cmp.rhs = typed_literal(lhs, Literal{advance().text}, op);
      }
    } else if (peek().kind == TokenKind::kWord) {
      RawValue raw = parse_raw_value();
      if (raw.agg != Aggregator::kNone) throw UnsupportedFeature("aggregate on comparison rhs");
      cmp.rhs = resolve_column(raw.column, scope);
    } else {
      fail_syntax("expected comparison operand");
    }
    return Predicate{std::move(cmp)};
  }

  std::vector<SqlToken> tokens_;
  size_t pos_ = 0;
  const Schema& schema_;
};

}  // namespace

std::string_view aggregator_name(Aggregator agg) {
  switch (agg) {
    case Aggregator::kNone: return "";
    case Aggregator::kCount: return "count";
    case Aggregator::kSum: return "sum";
    case Aggregator::kAvg: return "avg";
    case Aggregator::kMin: return "min";
    case Aggregator::kMax: return "max";
  }
  return "";
}

std::string_view compare_op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "!=";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
    case CompareOp::kLike: return "LIKE";
    case CompareOp::kNotLike: return "NOT LIKE";
  }
  return "=";
}

ColumnType value_type(const ValueExpr& expr, const Schema& schema) {
  switch (expr.agg) {
    case Aggregator::kCount:
      return ColumnType::kInteger;
    case Aggregator::kAvg:
      return ColumnType::kReal;
    case Aggregator::kSum:
    case Aggregator::kMin:
    case Aggregator::kMax:
    case Aggregator::kNone:
      break;
  }
  if (expr.column.is_star()) return ColumnType::kInteger;
  const Column* column = schema.find_column(expr.column.id());
  if (!column) return ColumnType::kText;
  if (expr.agg == Aggregator::kSum && column->type == ColumnType::kBoolean) {
    return ColumnType::kInteger;
  }
  return column->type;
}

Query parse_query(std::string_view sql, const Schema& schema) {
  Parser parser(sql, schema);
  return parser.parse_statement();
}

}  // namespace gsql
