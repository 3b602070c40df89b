#include <cctype>

#include "gsql/query_model.hpp"

namespace gsql {

namespace {

bool needs_quoting(const std::string& name) {
  static constexpr std::string_view kReserved[] = {
      "select", "from",  "where", "group",  "order",  "having", "limit", "union",
      "except", "intersect", "join", "inner", "left", "right", "full", "outer",
      "cross",  "natural", "on",   "as",     "and",    "or",     "not",   "in",
      "like",   "between", "is",   "asc",    "desc",   "by",     "distinct",
      "offset", "using", "all",    "exists", "null",   "case",   "when",  "then",
      "else",   "end",   "table",  "index",  "primary", "key",   "default",
      "check",  "unique", "references", "foreign", "values", "set",  "count",
      "sum",    "avg",   "min",    "max"};
  if (name.empty()) return true;
  if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return true;
  for (char c : name) {
    if (!(std::islower(static_cast<unsigned char>(c)) ||
          std::isdigit(static_cast<unsigned char>(c)) || c == '_')) {
      return true;
    }
  }
  for (auto w : kReserved) {
    if (name == w) return true;
  }
  return false;
}

std::string ident(const std::string& name) {
  if (!needs_quoting(name)) return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string table_label(const std::string& table, int instance) {
  if (instance == 0) return ident(table);
  return ident(table + "_" + std::to_string(instance + 1));
}

class Printer {
 public:
  std::string query(const Query& q) {
    std::string out = core(q.core);
    for (const auto& [op, c] : q.compound) {
      switch (op) {
        case SetOp::kUnion: out += " UNION "; break;
        case SetOp::kIntersect: out += " INTERSECT "; break;
        case SetOp::kExcept: out += " EXCEPT "; break;
      }
      out += core(c);
    }
    if (!q.order_by.empty()) {
      out += " ORDER BY ";
      for (size_t i = 0; i < q.order_by.size(); ++i) {
        if (i) out += ", ";
        out += value(q.order_by[i].expr, !q.compound.empty());
        if (q.order_by[i].descending) out += " DESC";
      }
    }
    if (q.limit) out += " LIMIT " + std::to_string(*q.limit);
    return out;
  }

 private:
  std::string column(const ColumnRef& ref, bool bare) {
    if (ref.is_star()) return "*";
    if (bare) return ident(ref.column);
    return table_label(ref.table, ref.instance) + "." + ident(ref.column);
  }

  std::string value(const ValueExpr& v, bool bare = false) {
    if (v.agg == Aggregator::kNone) return column(v.column, bare);
    std::string out(aggregator_name(v.agg));
    out += "(";
    if (v.distinct) out += "DISTINCT ";
    out += column(v.column, bare);
    out += ")";
    return out;
  }

  std::string predicate(const Predicate& p) {
    if (const auto* cmp = std::get_if<Comparison>(&p.node)) {
      std::string out = value(cmp->lhs);
      out += " ";
      out += compare_op_symbol(cmp->op);
      out += " ";
      if (const auto* lit = std::get_if<Literal>(&cmp->rhs)) {
        out += lit->to_sql();
      } else if (const auto* ref = std::get_if<ColumnRef>(&cmp->rhs)) {
        out += column(*ref, false);
      } else {
        out += "(" + query(*std::get<Box<Query>>(cmp->rhs)) + ")";
      }
      return out;
    }
    if (const auto* in = std::get_if<InSubquery>(&p.node)) {
      return value(in->lhs) + (in->negated ? " NOT IN (" : " IN (") + query(*in->subquery) +
             ")";
    }
    const auto& logical = std::get<Logical>(p.node);
    std::string out;
    for (size_t i = 0; i < logical.children.size(); ++i) {
      if (i) out += logical.op == LogicalOp::kAnd ? " AND " : " OR ";
      const Predicate& child = logical.children[i];
      const auto* inner = std::get_if<Logical>(&child.node);
      const bool wrap = inner != nullptr && inner->op != logical.op &&
                        inner->op == LogicalOp::kOr;
      out += wrap ? "(" + predicate(child) + ")" : predicate(child);
    }
    return out;
  }

  std::string core(const SelectCore& c) {
    std::string out = "SELECT ";
    if (c.distinct) out += "DISTINCT ";
    for (size_t i = 0; i < c.items.size(); ++i) {
      if (i) out += ", ";
      out += value(c.items[i]);
    }
    out += " FROM ";
    for (size_t i = 0; i < c.from.size(); ++i) {
      const TableRef& t = c.from[i];
      if (i) out += i < c.join_on.size() && c.join_on[i] ? " JOIN " : ", ";
      out += ident(t.table);
      if (t.instance != 0) out += " AS " + table_label(t.table, t.instance);
      if (i && i < c.join_on.size() && c.join_on[i]) out += " ON " + predicate(*c.join_on[i]);
    }
    if (c.where) out += " WHERE " + predicate(*c.where);
    if (!c.group_by.empty()) {
      out += " GROUP BY ";
      for (size_t i = 0; i < c.group_by.size(); ++i) {
        if (i) out += ", ";
        out += column(c.group_by[i], false);
      }
    }
    if (c.having) out += " HAVING " + predicate(*c.having);
    return out;
  }
};

}  // namespace

std::string print_query(const Query& query) { return Printer().query(query); }

}  // namespace gsql
