#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gsql/errors.hpp"
#include "gsql/schema.hpp"

namespace gsql {

// Owning pointer with value semantics; lets the AST recurse through
// subqueries while staying copyable and comparable.
template <class T>
class Box {
 public:
  Box() : ptr_(std::make_unique<T>()) {}
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.ptr_ == *b.ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

enum class Aggregator { kNone, kCount, kSum, kAvg, kMin, kMax };
enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe, kLike, kNotLike };
enum class LogicalOp { kAnd, kOr };
enum class SetOp { kUnion, kIntersect, kExcept };

std::string_view aggregator_name(Aggregator agg);
std::string_view compare_op_symbol(CompareOp op);

// Resolved column occurrence. `instance` separates repeated occurrences of
// the same table inside one FROM clause (self-joins); aliases are gone.
// The star column has an empty table.
struct ColumnRef {
  std::string table;
  std::string column;
  int instance = 0;

  bool is_star() const { return column == "*"; }
  ColumnId id() const { return {table, column}; }
  static ColumnRef star() { return {"", "*", 0}; }

  auto operator<=>(const ColumnRef&) const = default;
};

struct Literal {
  std::variant<std::int64_t, double, std::string> value;

  bool is_number() const { return !std::holds_alternative<std::string>(value); }
  bool is_string() const { return std::holds_alternative<std::string>(value); }
  double as_double() const;
  std::string to_sql() const;

  bool operator==(const Literal&) const = default;
};

struct ValueExpr {
  Aggregator agg = Aggregator::kNone;
  ColumnRef column;
  bool distinct = false;

  bool operator==(const ValueExpr&) const = default;
};

struct Query;

struct Comparison {
  ValueExpr lhs;
  CompareOp op = CompareOp::kEq;
  std::variant<Literal, ColumnRef, Box<Query>> rhs;

  bool operator==(const Comparison&) const = default;
};

struct InSubquery {
  ValueExpr lhs;
  bool negated = false;
  Box<Query> subquery;

  bool operator==(const InSubquery&) const = default;
};

struct Predicate;

struct Logical {
  LogicalOp op = LogicalOp::kAnd;
  std::vector<Predicate> children;

  bool operator==(const Logical&) const;
};

struct Predicate {
  std::variant<Comparison, InSubquery, Logical> node;

  bool operator==(const Predicate&) const = default;
};

inline bool Logical::operator==(const Logical& other) const {
  return op == other.op && children == other.children;
}

struct TableRef {
  std::string table;
  int instance = 0;

  bool operator==(const TableRef&) const = default;
};

struct SelectCore {
  bool distinct = false;
  std::vector<ValueExpr> items;
  std::vector<TableRef> from;
  // Parallel to `from`; the first entry is always empty.
  std::vector<std::optional<Predicate>> join_on;
  std::optional<Predicate> where;
  std::vector<ColumnRef> group_by;
  std::optional<Predicate> having;

  bool operator==(const SelectCore&) const = default;
};

struct OrderItem {
  ValueExpr expr;
  bool descending = false;

  bool operator==(const OrderItem&) const = default;
};

struct Query {
  SelectCore core;
  std::vector<std::pair<SetOp, SelectCore>> compound;
  std::vector<OrderItem> order_by;
  std::optional<std::int64_t> limit;

  bool operator==(const Query&) const = default;
};

// Parses the supported SQL subset and resolves names against `schema`.
// BETWEEN and IN-lists are rewritten into comparison trees.
// Throws SyntaxError, ResolutionError or UnsupportedFeature.
Query parse_query(std::string_view sql, const Schema& schema);

// Canonical text; parse_query(print_query(q)) == q for resolved q.
std::string print_query(const Query& query);

// Flattens nested AND/AND, OR/OR and single-child logical nodes.
void normalize(Query& query);
void normalize(Predicate& predicate);

struct OutputColumn {
  Aggregator agg = Aggregator::kNone;
  std::string column;  // "table.column" or "*"
  bool distinct = false;

  auto operator<=>(const OutputColumn&) const = default;
};

enum class ColumnMatchMode {
  kMultiset,  // order-insensitive
  kOrdered,   // select-list order must agree too
};

struct ColumnSignature {
  std::vector<OutputColumn> in_select_order;

  std::vector<OutputColumn> sorted() const;
  bool matches(const ColumnSignature& other,
               ColumnMatchMode mode = ColumnMatchMode::kMultiset) const;
  // Multiset equality.
  bool operator==(const ColumnSignature& other) const { return matches(other); }
};

ColumnSignature column_signature(const Query& query);

struct ConstantHint {
  ColumnId column;
  Literal value;
  CompareOp op = CompareOp::kEq;

  bool operator==(const ConstantHint&) const = default;
};

// Literals compared against columns in WHERE/HAVING, subqueries included,
// in a deterministic pre-order.
std::vector<ConstantHint> extract_constants(const Query& query);

// Semantic type of an expression as the engine would see it.
ColumnType value_type(const ValueExpr& expr, const Schema& schema);

// True iff every select item of the first core is an aggregate.
bool selects_only_aggregates(const Query& query);

}  // namespace gsql
