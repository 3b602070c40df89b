#include <algorithm>
#include <charconv>
#include <cmath>

#include "gsql/query_model.hpp"

namespace gsql {

double Literal::as_double() const {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&value)) return *d;
  return 0.0;
}

std::string Literal::to_sql() const {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&value)) {
    if (!std::isfinite(*d)) return *d > 0 ? "9e999" : (*d < 0 ? "-9e999" : "0.0");
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *d);
    std::string out(buf, end);
    // Keep a marker so the text reparses as a real.
    if (out.find_first_of(".e") == std::string::npos) out += ".0";
    return out;
  }
  std::string out = "'";
  for (char c : std::get<std::string>(value)) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

namespace {

void normalize_core(SelectCore& core);

void normalize_query_impl(Query& query) {
  normalize_core(query.core);
  for (auto& [op, core] : query.compound) normalize_core(core);
}

}  // namespace

void normalize(Predicate& predicate) {
  if (auto* cmp = std::get_if<Comparison>(&predicate.node)) {
    if (auto* sub = std::get_if<Box<Query>>(&cmp->rhs)) normalize_query_impl(**sub);
    return;
  }
  if (auto* in = std::get_if<InSubquery>(&predicate.node)) {
    normalize_query_impl(*in->subquery);
    return;
  }
  auto& logical = std::get<Logical>(predicate.node);
  std::vector<Predicate> flat;
  for (auto& child : logical.children) {
    normalize(child);
    auto* inner = std::get_if<Logical>(&child.node);
    if (inner && inner->op == logical.op) {
      for (auto& grandchild : inner->children) flat.push_back(std::move(grandchild));
    } else {
      flat.push_back(std::move(child));
    }
  }
  if (flat.size() == 1) {
    Predicate only = std::move(flat.front());
    predicate = std::move(only);
    return;
  }
  logical.children = std::move(flat);
}

namespace {

void normalize_core(SelectCore& core) {
  for (auto& on : core.join_on) {
    if (on) normalize(*on);
  }
  if (core.where) normalize(*core.where);
  if (core.having) normalize(*core.having);
}

}  // namespace

void normalize(Query& query) { normalize_query_impl(query); }

std::vector<OutputColumn> ColumnSignature::sorted() const {
  std::vector<OutputColumn> out = in_select_order;
  std::sort(out.begin(), out.end());
  return out;
}

bool ColumnSignature::matches(const ColumnSignature& other, ColumnMatchMode mode) const {
  if (mode == ColumnMatchMode::kOrdered) return in_select_order == other.in_select_order;
  return sorted() == other.sorted();
}

ColumnSignature column_signature(const Query& query) {
  ColumnSignature sig;
  for (const auto& item : query.core.items) {
    OutputColumn col;
    col.agg = item.agg;
    col.column = item.column.is_star() ? "*" : item.column.id().qualified();
    col.distinct = item.distinct || query.core.distinct;
    sig.in_select_order.push_back(std::move(col));
  }
  return sig;
}

namespace {

void collect_query(const Query& query, std::vector<ConstantHint>& out);

void collect_predicate(const Predicate& predicate, std::vector<ConstantHint>& out) {
  if (const auto* cmp = std::get_if<Comparison>(&predicate.node)) {
    if (const auto* lit = std::get_if<Literal>(&cmp->rhs)) {
      if (!cmp->lhs.column.is_star()) out.push_back({cmp->lhs.column.id(), *lit, cmp->op});
    } else if (const auto* sub = std::get_if<Box<Query>>(&cmp->rhs)) {
      collect_query(**sub, out);
    }
    return;
  }
  if (const auto* in = std::get_if<InSubquery>(&predicate.node)) {
    collect_query(*in->subquery, out);
    return;
  }
  for (const auto& child : std::get<Logical>(predicate.node).children) {
    collect_predicate(child, out);
  }
}

void collect_core(const SelectCore& core, std::vector<ConstantHint>& out) {
  if (core.where) collect_predicate(*core.where, out);
  if (core.having) collect_predicate(*core.having, out);
}

void collect_query(const Query& query, std::vector<ConstantHint>& out) {
  collect_core(query.core, out);
  for (const auto& [op, core] : query.compound) collect_core(core, out);
}

}  // namespace

std::vector<ConstantHint> extract_constants(const Query& query) {
  std::vector<ConstantHint> out;
  collect_query(query, out);
  return out;
}

bool selects_only_aggregates(const Query& query) {
  if (query.core.items.empty()) return false;
  return std::all_of(query.core.items.begin(), query.core.items.end(),
                     [](const ValueExpr& v) { return v.agg != Aggregator::kNone; });
}

}  // namespace gsql
