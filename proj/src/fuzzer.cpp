#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "gsql/search.hpp"
#include "gsql/testsuite.hpp"

namespace gsql {

namespace {

constexpr int kIntLow = -100;

struct ColumnPlan {
  ColumnId id;
  ColumnType type = ColumnType::kText;
  bool primary = false;   // sole or composite primary key member
  bool unique = false;    // must not repeat within the table
  std::optional<ColumnId> parent;
  std::vector<Literal> hints;
  std::vector<Cell> pool;  // distinct original values
};

std::vector<Cell> value_pool(const DatabaseInstance* original, const ColumnId& id) {
  std::vector<Cell> out;
  if (!original) return out;
  const Table* table = original->schema().find_table(id.table);
  const std::vector<Row>* rows = original->rows(id.table);
  if (!table || !rows) return out;
  size_t col = 0;
  while (col < table->columns.size() && table->columns[col].name != id.column) ++col;
  if (col == table->columns.size()) return out;
  std::set<std::string> seen;
  for (const auto& row : *rows) {
    if (is_null(row[col])) continue;
    const std::string key = std::to_string(row[col].index()) + ":" + cell_to_string(row[col]);
    if (seen.insert(key).second) out.push_back(row[col]);
  }
  return out;
}

std::string random_word(SplitRng& rng, size_t min_len = 3, size_t max_len = 8) {
  const size_t len = min_len + static_cast<size_t>(rng.uniform01() * double(max_len - min_len + 1));
  std::string s;
  for (size_t i = 0; i < len; ++i) s.push_back(static_cast<char>('a' + int(rng.uniform01() * 26)));
  return s;
}

// A string matching a LIKE pattern.
std::string like_instance(const std::string& pattern, SplitRng& rng) {
  std::string s;
  for (char c : pattern) {
    if (c == '%') s += rng.uniform01() < 0.5 ? "" : random_word(rng, 1, 4);
    else if (c == '_') s.push_back(static_cast<char>('a' + int(rng.uniform01() * 26)));
    else s.push_back(c);
  }
  return s;
}

std::int64_t uniform_int(SplitRng& rng, std::int64_t lo, std::int64_t hi) {
  const double span = static_cast<double>(hi - lo + 1);
  return lo + std::min<std::int64_t>(hi - lo, static_cast<std::int64_t>(rng.uniform01() * span));
}

Cell coerce(const Cell& c, ColumnType type) {
  if (is_null(c)) return c;
  switch (type) {
    case ColumnType::kInteger:
      if (const auto* d = std::get_if<double>(&c)) return static_cast<std::int64_t>(std::llround(*d));
      if (const auto* b = std::get_if<bool>(&c)) return std::int64_t{*b ? 1 : 0};
      if (std::holds_alternative<std::string>(c)) return std::monostate{};
      return c;
    case ColumnType::kReal:
      if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
      if (const auto* b = std::get_if<bool>(&c)) return *b ? 1.0 : 0.0;
      if (std::holds_alternative<std::string>(c)) return std::monostate{};
      return c;
    case ColumnType::kBoolean:
      if (const auto* i = std::get_if<std::int64_t>(&c)) return *i != 0;
      if (const auto* d = std::get_if<double>(&c)) return *d != 0.0;
      if (std::holds_alternative<std::string>(c)) return std::monostate{};
      return c;
    case ColumnType::kText:
    case ColumnType::kDateTime:
      if (!std::holds_alternative<std::string>(c)) return cell_to_string(c);
      return c;
  }
  return c;
}

// Values worth planting for a hinted column: the literal, its neighbours
// and, for widened integers, the half steps in between.
std::vector<Cell> hint_values(const ColumnPlan& plan, bool widened, SplitRng& rng) {
  std::vector<Cell> out;
  for (const auto& lit : plan.hints) {
    if (lit.is_string()) {
      const auto& s = std::get<std::string>(lit.value);
      if (plan.type == ColumnType::kText || plan.type == ColumnType::kDateTime) {
        out.push_back(s.find_first_of("%_") != std::string::npos ? Cell{like_instance(s, rng)} : Cell{s});
      }
      continue;
    }
    const double v = lit.as_double();
    switch (plan.type) {
      case ColumnType::kInteger: {
        const auto i = static_cast<std::int64_t>(std::llround(v));
        for (auto x : {i, i + 1, i - 1}) out.push_back(x);
        break;
      }
      case ColumnType::kReal:
        for (double x : {v, v + 1, v - 1}) out.push_back(x);
        if (widened) {
          out.push_back(v + 0.5);
          out.push_back(v - 0.5);
        }
        break;
      case ColumnType::kBoolean:
        out.push_back(v != 0.0);
        break;
      default:
        break;
    }
  }
  return out;
}

class TableSampler {
 public:
  TableSampler(const FuzzConfig& config, SplitRng& rng) : config_(config), rng_(rng) {}

  Cell sample(const ColumnPlan& plan, bool widened) {
    if (!plan.hints.empty() && rng_.uniform01() < config_.hint_mass) {
      const auto values = hint_values(plan, widened, rng_);
      if (!values.empty()) return values[static_cast<size_t>(rng_.uniform01() * double(values.size()))];
    }
    const bool textual = plan.type == ColumnType::kText || plan.type == ColumnType::kDateTime;
    const double pool_p = textual ? config_.text_pool_probability : config_.pool_probability;
    if (!plan.pool.empty() && rng_.uniform01() < pool_p) {
      return coerce(plan.pool[static_cast<size_t>(rng_.uniform01() * double(plan.pool.size()))],
                    plan.type);
    }
    const std::int64_t hi = 10 * static_cast<std::int64_t>(config_.row_cap);
    switch (plan.type) {
      case ColumnType::kInteger:
        return uniform_int(rng_, kIntLow, hi);
      case ColumnType::kReal:
        return round_to_half_precision(kIntLow + rng_.uniform01() * double(hi - kIntLow));
      case ColumnType::kBoolean:
        return rng_.uniform01() < 0.5;
      case ColumnType::kDateTime: {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", int(uniform_int(rng_, 1990, 2020)),
                      int(uniform_int(rng_, 1, 12)), int(uniform_int(rng_, 1, 28)));
        return std::string(buf);
      }
      case ColumnType::kText:
        return random_word(rng_);
    }
    return std::monostate{};
  }

 private:
  const FuzzConfig& config_;
  SplitRng& rng_;
};

std::vector<size_t> topological_order(const Schema& schema) {
  std::vector<size_t> order;
  std::vector<int> state(schema.tables.size(), 0);
  std::function<void(size_t)> visit = [&](size_t t) {
    if (state[t]) return;
    state[t] = 1;
    for (const auto& [child, parent] : schema.foreign_keys) {
      if (child.table != schema.tables[t].name || parent.table == child.table) continue;
      for (size_t p = 0; p < schema.tables.size(); ++p) {
        if (schema.tables[p].name == parent.table && state[p] == 0) visit(p);
      }
    }
    state[t] = 2;
    order.push_back(t);
  };
  for (size_t t = 0; t < schema.tables.size(); ++t) visit(t);
  return order;
}

std::string cell_key(const Cell& c) { return std::to_string(c.index()) + ":" + cell_to_string(c); }

}  // namespace

bool wants_unique_values(const ColumnId& column, const DatabaseInstance* original) {
  const std::string name = to_lower(column.column);
  if (name.find("name") == std::string::npos && name.find("id") == std::string::npos &&
      name.find("phone") == std::string::npos) {
    return false;
  }
  if (!original) return false;
  const Table* table = original->schema().find_table(column.table);
  const std::vector<Row>* rows = original->rows(column.table);
  if (!table || !rows || rows->empty()) return false;
  size_t col = 0;
  while (col < table->columns.size() && table->columns[col].name != column.column) ++col;
  if (col == table->columns.size()) return false;
  std::set<std::string> seen;
  for (const auto& row : *rows) {
    if (is_null(row[col]) || !seen.insert(cell_key(row[col])).second) return false;
  }
  return true;
}

DatabaseInstance fuzz_database(const Schema& schema, const std::vector<ConstantHint>& hints,
                               std::uint64_t seed, const FuzzConfig& config,
                               const DatabaseInstance* original) {
  if (config.row_cap < 1) throw std::invalid_argument("row cap must be >= 1");
  SplitRng rng(seed);
  Schema out_schema = schema;

  std::map<ColumnId, std::vector<Literal>> hinted;
  for (const auto& h : hints) hinted[h.column].push_back(h.value);
  // Hints on a foreign key also steer the parent key it draws from.
  for (const auto& [child, parent] : schema.foreign_keys) {
    auto it = hinted.find(child);
    if (it != hinted.end()) {
      auto& dst = hinted[parent];
      dst.insert(dst.end(), it->second.begin(), it->second.end());
    }
  }

  auto is_key = [&](const ColumnId& id) {
    if (schema.is_primary_key(id)) return true;
    for (const auto& [child, parent] : schema.foreign_keys) {
      if (child == id || parent == id) return true;
    }
    return false;
  };

  // Decide widening before any cell is drawn.
  std::set<ColumnId> widened;
  for (const auto& [id, values] : hinted) {
    const Column* col = schema.find_column(id);
    if (!col || col->type != ColumnType::kInteger || is_key(id)) continue;
    if (rng.uniform01() < config.widen_probability) widened.insert(id);
  }
  for (auto& table : out_schema.tables) {
    for (auto& col : table.columns) {
      if (widened.count({table.name, col.name})) col.type = ColumnType::kReal;
    }
  }

  std::vector<std::vector<Row>> rows(schema.tables.size());
  TableSampler sampler(config, rng);
  for (size_t t : topological_order(out_schema)) {
    const Table& table = out_schema.tables[t];
    const auto pk = out_schema.primary_key_of(table.name);
    std::vector<ColumnPlan> plans;
    for (const auto& col : table.columns) {
      ColumnPlan p;
      p.id = {table.name, col.name};
      p.type = col.type;
      p.primary = std::find(pk.begin(), pk.end(), p.id) != pk.end();
      p.unique = (p.primary && pk.size() == 1) || wants_unique_values(p.id, original);
      p.parent = out_schema.parent_of(p.id);
      if (auto it = hinted.find(p.id); it != hinted.end()) p.hints = it->second;
      p.pool = value_pool(original, p.id);
      plans.push_back(std::move(p));
    }

    size_t n = 1 + static_cast<size_t>(rng.uniform01() * config.row_cap);
    n = std::min<size_t>(n, static_cast<size_t>(config.row_cap));
    std::vector<std::vector<Cell>> columns(plans.size());

    // Keys and parents first so self references can see them.
    auto parent_values = [&](const ColumnId& parent, size_t self_col) -> std::vector<Cell> {
      std::vector<Cell> values;
      if (parent.table == table.name) {
        for (size_t c = 0; c < plans.size(); ++c) {
          if (plans[c].id.column == parent.column && c != self_col) values = columns[c];
        }
      } else {
        for (size_t p = 0; p < out_schema.tables.size(); ++p) {
          if (out_schema.tables[p].name != parent.table) continue;
          const auto& ptable = out_schema.tables[p];
          for (size_t c = 0; c < ptable.columns.size(); ++c) {
            if (ptable.columns[c].name != parent.column) continue;
            for (const auto& row : rows[p]) {
              if (!is_null(row[c])) values.push_back(row[c]);
            }
          }
        }
      }
      return values;
    };

    std::vector<size_t> col_order;
    for (size_t c = 0; c < plans.size(); ++c) {
      if (!plans[c].parent) col_order.push_back(c);
    }
    for (size_t c = 0; c < plans.size(); ++c) {
      if (plans[c].parent) col_order.push_back(c);
    }

    for (size_t c : col_order) {
      const ColumnPlan& plan = plans[c];
      const bool wide = widened.count(plan.id) > 0;
      auto& values = columns[c];
      if (plan.parent) {
        std::vector<Cell> parents = parent_values(*plan.parent, c);
        for (auto& v : parents) v = coerce(v, plan.type);
        if (parents.empty()) {
          values.assign(n, std::monostate{});
          continue;
        }
        if (plan.unique) {
          // Draw parents without replacement.
          for (size_t i = parents.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(rng.uniform01() * double(i));
            std::swap(parents[i - 1], parents[std::min(j, i - 1)]);
          }
          n = std::min(n, parents.size());
          values.assign(parents.begin(), parents.begin() + static_cast<std::ptrdiff_t>(n));
          for (auto& col : columns) {
            if (col.size() > n) col.resize(n);
          }
        } else {
          for (size_t i = 0; i < n; ++i) {
            values.push_back(parents[static_cast<size_t>(rng.uniform01() * double(parents.size()))]);
          }
        }
        continue;
      }
      if (plan.unique) {
        std::set<std::string> used;
        std::vector<Cell> pool = plan.pool;
        for (size_t i = 0; i < n; ++i) {
          Cell v;
          bool ok = false;
          for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
            v = sampler.sample(plan, wide);
            ok = !is_null(v) && !used.count(cell_key(v));
          }
          if (!ok) {
            // Dense fallback that cannot collide with drawn integers.
            if (plan.type == ColumnType::kInteger || plan.type == ColumnType::kReal) {
              std::int64_t k = 10 * config.row_cap + 1 + static_cast<std::int64_t>(i);
              while (used.count(cell_key(coerce(Cell{k}, plan.type)))) ++k;
              v = coerce(Cell{k}, plan.type);
            } else {
              do {
                v = random_word(rng, 6, 10);
              } while (used.count(cell_key(v)));
            }
          }
          used.insert(cell_key(v));
          values.push_back(v);
        }
        continue;
      }
      for (size_t i = 0; i < n; ++i) {
        if (!plan.primary && rng.uniform01() < config.null_probability) {
          values.push_back(std::monostate{});
        } else {
          Cell v = sampler.sample(plan, wide);
          if (plan.primary && is_null(v)) v = sampler.sample(plan, false);
          values.push_back(is_null(v) && plan.primary ? Cell{std::int64_t(i)} : v);
        }
      }
    }

    // Assemble rows; composite keys drop duplicate tuples.
    std::vector<size_t> pk_cols;
    for (size_t c = 0; c < plans.size(); ++c) {
      if (plans[c].primary) pk_cols.push_back(c);
    }
    std::set<std::string> seen_keys;
    for (size_t r = 0; r < n; ++r) {
      Row row;
      for (size_t c = 0; c < plans.size(); ++c) row.push_back(columns[c].size() > r ? columns[c][r] : Cell{});
      bool keep = true;
      if (!pk_cols.empty()) {
        std::string key;
        for (size_t c : pk_cols) {
          if (is_null(row[c])) keep = false;
          key += cell_key(row[c]) + "\x1f";
        }
        keep = keep && seen_keys.insert(key).second;
      }
      if (keep) rows[t].push_back(std::move(row));
    }
  }
  return DatabaseInstance::from_rows(std::move(out_schema), std::move(rows),
                                     Provenance{Provenance::Kind::kFuzzed, seed});
}

}  // namespace gsql
