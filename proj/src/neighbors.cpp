#include <algorithm>
#include <set>

#include "gsql/search.hpp"
#include "gsql/testsuite.hpp"

namespace gsql {

std::string_view edit_kind_name(EditKind kind) {
  switch (kind) {
    case EditKind::kOpSwap: return "op_swap";
    case EditKind::kLiteral: return "literal";
    case EditKind::kAggregator: return "aggregator";
    case EditKind::kDistinct: return "distinct";
    case EditKind::kOrderDirection: return "order_direction";
    case EditKind::kLimit: return "limit";
    case EditKind::kAndOr: return "and_or";
    case EditKind::kDropPredicate: return "drop_predicate";
    case EditKind::kSiblingColumn: return "sibling_column";
  }
  return "";
}

namespace {

// Mutable views into one copy of a query. Collection order is fixed, so
// index i names the same site in every copy of the same query.
struct Sites {
  std::vector<Comparison*> comparisons;
  std::vector<Comparison*> numeric_literals;
  std::vector<ValueExpr*> aggregates;
  std::vector<SelectCore*> cores;
  std::vector<bool> set_semantics;  // per core: duplicates cannot reach the output
  std::vector<ValueExpr*> aggregate_distinct;
  std::vector<OrderItem*> orders;
  std::vector<Query*> limits;
  std::vector<Logical*> logicals;
  std::vector<std::pair<Logical*, size_t>> children;
  std::vector<std::optional<Predicate>*> whole_predicates;
  std::vector<ColumnRef*> columns;
};

void collect_query(Query& q, Sites& s, bool set_semantics = false);

void collect_predicate(Predicate& p, Sites& s) {
  if (auto* cmp = std::get_if<Comparison>(&p.node)) {
    s.comparisons.push_back(cmp);
    if (!cmp->lhs.column.is_star() && cmp->lhs.agg == Aggregator::kNone) {
      s.columns.push_back(&cmp->lhs.column);
    }
    if (cmp->lhs.agg != Aggregator::kNone) s.aggregates.push_back(&cmp->lhs);
    if (auto* lit = std::get_if<Literal>(&cmp->rhs); lit && lit->is_number()) {
      s.numeric_literals.push_back(cmp);
    }
    if (auto* sub = std::get_if<Box<Query>>(&cmp->rhs)) collect_query(**sub, s);
    return;
  }
  if (auto* in = std::get_if<InSubquery>(&p.node)) {
    if (!in->lhs.column.is_star() && in->lhs.agg == Aggregator::kNone) {
      s.columns.push_back(&in->lhs.column);
    }
    collect_query(*in->subquery, s, true);
    return;
  }
  auto& logical = std::get<Logical>(p.node);
  s.logicals.push_back(&logical);
  for (size_t i = 0; i < logical.children.size(); ++i) s.children.emplace_back(&logical, i);
  for (auto& child : logical.children) collect_predicate(child, s);
}

void collect_core(SelectCore& core, Sites& s, bool set_semantics) {
  s.cores.push_back(&core);
  s.set_semantics.push_back(set_semantics);
  for (auto& item : core.items) {
    if (item.agg != Aggregator::kNone) {
      s.aggregates.push_back(&item);
      if (!item.column.is_star() && (item.agg == Aggregator::kCount ||
                                     item.agg == Aggregator::kSum || item.agg == Aggregator::kAvg)) {
        s.aggregate_distinct.push_back(&item);
      }
    } else if (!item.column.is_star()) {
      s.columns.push_back(&item.column);
    }
  }
  if (core.where) {
    if (!std::holds_alternative<Logical>(core.where->node)) s.whole_predicates.push_back(&core.where);
    collect_predicate(*core.where, s);
  }
  for (auto& g : core.group_by) s.columns.push_back(&g);
  if (core.having) {
    if (!std::holds_alternative<Logical>(core.having->node)) s.whole_predicates.push_back(&core.having);
    collect_predicate(*core.having, s);
  }
}

void collect_query(Query& q, Sites& s, bool set_semantics) {
  // UNION, INTERSECT and EXCEPT deduplicate on their own.
  const bool compound = !q.compound.empty();
  const bool one_row = !compound && q.limit && *q.limit == 1;
  collect_core(q.core, s, set_semantics || compound || one_row);
  for (auto& [op, core] : q.compound) collect_core(core, s, true);
  for (auto& o : q.order_by) {
    s.orders.push_back(&o);
    if (o.expr.agg != Aggregator::kNone) s.aggregates.push_back(&o.expr);
    else if (!o.expr.column.is_star()) s.columns.push_back(&o.expr.column);
  }
  if (q.limit) s.limits.push_back(&q);
}

struct Mutation {
  EditKind kind;
  size_t site;
  int code = 0;
  ColumnRef column;  // replacement column or aggregate target
  Aggregator agg = Aggregator::kNone;
};

bool numeric_column(const Schema& schema, const ColumnRef& ref) {
  if (ref.is_star()) return false;
  const Column* c = schema.find_column(ref.id());
  return c && is_numeric(c->type) && c->type != ColumnType::kBoolean;
}

bool core_rows_unique(const SelectCore& core, const Schema& schema,
                      const DatabaseInstance* original) {
  if (selects_only_aggregates(Query{core, {}, {}, {}}) && core.group_by.empty()) return true;
  auto selected = [&](const ColumnId& id) {
    return std::any_of(core.items.begin(), core.items.end(), [&](const ValueExpr& v) {
      return v.agg == Aggregator::kNone && v.column.id() == id;
    });
  };
  if (!core.group_by.empty()) {
    return std::all_of(core.group_by.begin(), core.group_by.end(),
                       [&](const ColumnRef& g) { return selected(g.id()); });
  }
  if (core.from.size() != 1) return false;
  const auto pk = schema.primary_key_of(core.from.front().table);
  if (!pk.empty() && std::all_of(pk.begin(), pk.end(), selected)) return true;
  // The fuzzer keeps these columns unique, so no suite database repeats them.
  return std::any_of(core.items.begin(), core.items.end(), [&](const ValueExpr& v) {
    return v.agg == Aggregator::kNone && !v.column.is_star() &&
           wants_unique_values(v.column.id(), original);
  });
}

std::vector<Mutation> plan_mutations(const Query& gold, const Schema& schema,
                                     const std::vector<EditKind>& edits,
                                     const DatabaseInstance* original) {
  Query probe = gold;
  Sites s;
  collect_query(probe, s);
  auto enabled = [&](EditKind k) {
    return edits.empty() || std::find(edits.begin(), edits.end(), k) != edits.end();
  };
  std::vector<Mutation> out;

  if (enabled(EditKind::kOpSwap)) {
    for (size_t i = 0; i < s.comparisons.size(); ++i) {
      const Comparison& c = *s.comparisons[i];
      std::vector<CompareOp> ops;
      if (c.op == CompareOp::kLike) ops = {CompareOp::kNotLike};
      else if (c.op == CompareOp::kNotLike) ops = {CompareOp::kLike};
      else if (std::holds_alternative<Literal>(c.rhs) && std::get<Literal>(c.rhs).is_string())
        ops = {CompareOp::kEq, CompareOp::kNe};
      else
        ops = {CompareOp::kEq, CompareOp::kNe, CompareOp::kLt, CompareOp::kLe, CompareOp::kGt,
               CompareOp::kGe};
      for (auto op : ops) {
        if (op != c.op) out.push_back({EditKind::kOpSwap, i, static_cast<int>(op), {}, Aggregator::kNone});
      }
    }
  }
  if (enabled(EditKind::kLiteral)) {
    for (size_t i = 0; i < s.numeric_literals.size(); ++i) {
      const Literal& lit = std::get<Literal>(s.numeric_literals[i]->rhs);
      for (int code = 0; code < 3; ++code) {
        if (code == 2 && lit.as_double() == 0.0) continue;
        out.push_back({EditKind::kLiteral, i, code, {}, Aggregator::kNone});
      }
    }
  }
  if (enabled(EditKind::kAggregator)) {
    static constexpr Aggregator kAll[] = {Aggregator::kCount, Aggregator::kSum, Aggregator::kAvg,
                                          Aggregator::kMin, Aggregator::kMax};
    for (size_t i = 0; i < s.aggregates.size(); ++i) {
      const ValueExpr& v = *s.aggregates[i];
      if (v.column.is_star()) {
        // count(*) becomes an aggregate over a numeric column of the
        // first table that column-free counting could see.
        const Table* table = nullptr;
        for (const auto* core : s.cores) {
          for (const auto& item : core->items) {
            if (&item == &v && !core->from.empty()) table = schema.find_table(core->from.front().table);
          }
        }
        if (!table && !probe.core.from.empty()) table = schema.find_table(probe.core.from.front().table);
        if (!table) continue;
        for (const auto& col : table->columns) {
          ColumnRef ref{table->name, col.name, 0};
          if (!numeric_column(schema, ref)) continue;
          for (auto agg : {Aggregator::kSum, Aggregator::kAvg, Aggregator::kMin, Aggregator::kMax}) {
            out.push_back({EditKind::kAggregator, i, 0, ref, agg});
          }
        }
        continue;
      }
      for (auto agg : kAll) {
        if (agg == v.agg) continue;
        if ((agg == Aggregator::kSum || agg == Aggregator::kAvg) && !numeric_column(schema, v.column)) continue;
        out.push_back({EditKind::kAggregator, i, 0, v.column, agg});
      }
    }
  }
  if (enabled(EditKind::kDistinct)) {
    for (size_t i = 0; i < s.cores.size(); ++i) {
      if (s.set_semantics[i] || core_rows_unique(*s.cores[i], schema, original)) continue;
      out.push_back({EditKind::kDistinct, i, 0, {}, Aggregator::kNone});
    }
    for (size_t i = 0; i < s.aggregate_distinct.size(); ++i) {
      if (schema.is_primary_key(s.aggregate_distinct[i]->column.id()) &&
          !s.aggregate_distinct[i]->distinct) {
        continue;
      }
      out.push_back({EditKind::kDistinct, i, 1, {}, Aggregator::kNone});
    }
  }
  if (enabled(EditKind::kOrderDirection)) {
    for (size_t i = 0; i < s.orders.size(); ++i) out.push_back({EditKind::kOrderDirection, i, 0, {}, Aggregator::kNone});
  }
  if (enabled(EditKind::kLimit)) {
    for (size_t i = 0; i < s.limits.size(); ++i) {
      out.push_back({EditKind::kLimit, i, 1, {}, Aggregator::kNone});
      if (*s.limits[i]->limit > 1) out.push_back({EditKind::kLimit, i, -1, {}, Aggregator::kNone});
    }
  }
  if (enabled(EditKind::kAndOr)) {
    for (size_t i = 0; i < s.logicals.size(); ++i) out.push_back({EditKind::kAndOr, i, 0, {}, Aggregator::kNone});
  }
  if (enabled(EditKind::kDropPredicate)) {
    for (size_t i = 0; i < s.children.size(); ++i) out.push_back({EditKind::kDropPredicate, i, 0, {}, Aggregator::kNone});
    for (size_t i = 0; i < s.whole_predicates.size(); ++i) {
      out.push_back({EditKind::kDropPredicate, i, 1, {}, Aggregator::kNone});
    }
  }
  if (enabled(EditKind::kSiblingColumn)) {
    for (size_t i = 0; i < s.columns.size(); ++i) {
      const ColumnRef& ref = *s.columns[i];
      const Table* table = schema.find_table(ref.table);
      const Column* self = schema.find_column(ref.id());
      if (!table || !self) continue;
      for (const auto& col : table->columns) {
        if (col.name == ref.column || col.type != self->type) continue;
        out.push_back({EditKind::kSiblingColumn, i, 0, ColumnRef{ref.table, col.name, ref.instance}});
      }
    }
  }
  return out;
}

Literal shifted(const Literal& lit, int code) {
  if (const auto* i = std::get_if<std::int64_t>(&lit.value)) {
    switch (code) {
      case 0: return Literal{*i + 1};
      case 1: return Literal{*i - 1};
      default: return Literal{*i * 2};
    }
  }
  const double d = lit.as_double();
  switch (code) {
    case 0: return Literal{d + 1.0};
    case 1: return Literal{d - 1.0};
    default: return Literal{d * 2.0};
  }
}

void apply(Query& q, const Mutation& m) {
  Sites s;
  collect_query(q, s);
  switch (m.kind) {
    case EditKind::kOpSwap:
      s.comparisons[m.site]->op = static_cast<CompareOp>(m.code);
      break;
    case EditKind::kLiteral: {
      auto& lit = std::get<Literal>(s.numeric_literals[m.site]->rhs);
      lit = shifted(lit, m.code);
      break;
    }
    case EditKind::kAggregator:
      s.aggregates[m.site]->agg = m.agg;
      s.aggregates[m.site]->column = m.column;
      if (m.agg == Aggregator::kMin || m.agg == Aggregator::kMax) s.aggregates[m.site]->distinct = false;
      break;
    case EditKind::kDistinct:
      if (m.code == 0) s.cores[m.site]->distinct = !s.cores[m.site]->distinct;
      else s.aggregate_distinct[m.site]->distinct = !s.aggregate_distinct[m.site]->distinct;
      break;
    case EditKind::kOrderDirection:
      s.orders[m.site]->descending = !s.orders[m.site]->descending;
      break;
    case EditKind::kLimit:
      *s.limits[m.site]->limit += m.code;
      break;
    case EditKind::kAndOr: {
      auto& op = s.logicals[m.site]->op;
      op = op == LogicalOp::kAnd ? LogicalOp::kOr : LogicalOp::kAnd;
      break;
    }
    case EditKind::kDropPredicate:
      if (m.code == 0) {
        auto [logical, index] = s.children[m.site];
        logical->children.erase(logical->children.begin() + static_cast<std::ptrdiff_t>(index));
      } else {
        s.whole_predicates[m.site]->reset();
      }
      break;
    case EditKind::kSiblingColumn:
      *s.columns[m.site] = m.column;
      break;
  }
}

void shuffle(std::vector<Neighbor>& pool, std::uint64_t seed) {
  SplitRng rng(seed);
  for (size_t i = pool.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform01() * static_cast<double>(i));
    std::swap(pool[i - 1], pool[std::min(j, i - 1)]);
  }
}

}  // namespace

std::vector<Neighbor> enumerate_neighbors(const Query& gold, const Schema& schema,
                                          const std::vector<EditKind>& edits,
                                          const DatabaseInstance* original) {
  std::vector<Neighbor> out;
  std::set<std::string> seen{print_query(gold)};
  for (const auto& m : plan_mutations(gold, schema, edits, original)) {
    Query copy = gold;
    apply(copy, m);
    normalize(copy);
    Neighbor n;
    n.edit = m.kind;
    try {
      n.query = parse_query(print_query(copy), schema);
    } catch (const QueryError&) {
      continue;
    }
    if (n.query == gold) continue;
    n.sql = print_query(n.query);
    if (!seen.insert(n.sql).second) continue;
    out.push_back(std::move(n));
  }
  return out;
}

NeighborSet generate_neighbors(const Query& gold, const Schema& schema, int count,
                               std::uint64_t seed, const std::vector<EditKind>& edits,
                               const DatabaseInstance* original) {
  if (count < 1) throw std::invalid_argument("neighbor count must be >= 1");
  NeighborSet set;
  set.gold = gold;
  set.seed = seed;
  set.neighbors = enumerate_neighbors(gold, schema, edits, original);
  if (set.neighbors.empty()) throw NoNeighborsPossible("no single-edit neighbor for " + print_query(gold));
  shuffle(set.neighbors, seed);
  if (set.neighbors.size() > static_cast<size_t>(count)) set.neighbors.resize(static_cast<size_t>(count));
  return set;
}

NeighborSplit split_neighbors(const Query& gold, const Schema& schema, int construction_count,
                              int heldout_count, std::uint64_t seed,
                              const DatabaseInstance* original) {
  NeighborSplit split;
  split.construction.gold = split.heldout.gold = gold;
  split.construction.seed = split.heldout.seed = seed;
  std::vector<Neighbor> pool = enumerate_neighbors(gold, schema, {}, original);
  if (pool.empty()) throw NoNeighborsPossible("no single-edit neighbor for " + print_query(gold));
  shuffle(pool, seed);
  for (size_t i = 0; i < pool.size(); ++i) {
    auto& target = i % 2 == 0 ? split.construction : split.heldout;
    const int cap = i % 2 == 0 ? construction_count : heldout_count;
    if (static_cast<int>(target.neighbors.size()) < cap) target.neighbors.push_back(pool[i]);
  }
  // Small pools leave the construction side short; top it up with two-edit
  // neighbors of its own members. None of them can equal a held-out query.
  auto& cons = split.construction.neighbors;
  if (static_cast<int>(cons.size()) >= construction_count) return split;
  std::set<std::string> seen{print_query(gold)};
  for (const auto& n : pool) seen.insert(n.sql);
  std::vector<Neighbor> extra;
  for (const auto& n : cons) {
    for (auto& m : enumerate_neighbors(n.query, schema, {}, original)) {
      if (seen.insert(m.sql).second) extra.push_back(std::move(m));
    }
  }
  shuffle(extra, seed ^ 0x2545f4914f6cdd1dULL);
  for (auto& m : extra) {
    if (static_cast<int>(cons.size()) >= construction_count) break;
    cons.push_back(std::move(m));
  }
  return split;
}

}  // namespace gsql
