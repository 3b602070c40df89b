#include "gsql/denotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "gsql/query_model.hpp"

namespace gsql {

std::string cell_to_string(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return "NULL"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
      return std::string(buf, end);
    }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(bool b) const { return b ? "1" : "0"; }
  };
  return std::visit(V{}, c);
}

nlohmann::json cell_to_json(const Cell& c) {
  struct V {
    nlohmann::json operator()(std::monostate) const { return nullptr; }
    nlohmann::json operator()(std::int64_t i) const { return i; }
    nlohmann::json operator()(double d) const { return d; }
    nlohmann::json operator()(const std::string& s) const { return s; }
    nlohmann::json operator()(bool b) const { return b; }
  };
  return std::visit(V{}, c);
}

Cell cell_from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return std::monostate{};
    case nlohmann::json::value_t::boolean: return j.get<bool>();
    case nlohmann::json::value_t::number_integer: return j.get<std::int64_t>();
    case nlohmann::json::value_t::number_unsigned:
      return static_cast<std::int64_t>(j.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float: return j.get<double>();
    case nlohmann::json::value_t::string: return j.get<std::string>();
    default: return j.dump();
  }
}

double round_to_half_precision(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  int exp = 0;
  const double mant = std::frexp(x, &exp);  // |mant| in [0.5, 1)
  return std::ldexp(std::nearbyint(std::ldexp(mant, 11)), exp - 11);
}

namespace {

// Canonical cell view used for both sorting and equality.
enum class Rank { kNull = 0, kNumber = 1, kText = 2 };

struct Key {
  Rank rank;
  double number = 0;
  const std::string* text = nullptr;
};

Key key_of(const Cell& c) {
  if (is_null(c)) return {Rank::kNull};
  if (const auto* i = std::get_if<std::int64_t>(&c)) return {Rank::kNumber, static_cast<double>(*i)};
  if (const auto* d = std::get_if<double>(&c)) return {Rank::kNumber, round_to_half_precision(*d)};
  if (const auto* b = std::get_if<bool>(&c)) return {Rank::kNumber, *b ? 1.0 : 0.0};
  return {Rank::kText, 0, &std::get<std::string>(c)};
}

bool int_exact(const Cell& a, const Cell& b) {
  const auto* x = std::get_if<std::int64_t>(&a);
  const auto* y = std::get_if<std::int64_t>(&b);
  return x && y;
}

bool cells_equal(const Cell& a, const Cell& b) {
  if (int_exact(a, b)) return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
  const Key x = key_of(a), y = key_of(b);
  if (x.rank != y.rank) return false;
  switch (x.rank) {
    case Rank::kNull: return true;
    case Rank::kText: return *x.text == *y.text;
    case Rank::kNumber: {
      if (x.number == y.number) return true;
      const double scale = std::max(std::fabs(x.number), std::fabs(y.number));
      return std::fabs(x.number - y.number) <= kRelativeTolerance * scale;
    }
  }
  return false;
}

int cell_order(const Cell& a, const Cell& b) {
  if (int_exact(a, b)) {
    const auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  const Key x = key_of(a), y = key_of(b);
  if (x.rank != y.rank) return x.rank < y.rank ? -1 : 1;
  if (x.rank == Rank::kNumber) return x.number < y.number ? -1 : (x.number > y.number ? 1 : 0);
  if (x.rank == Rank::kText) return x.text->compare(*y.text) < 0 ? -1 : (*x.text == *y.text ? 0 : 1);
  return 0;
}

bool rows_equal(const Row& a, const Row& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!cells_equal(a[i], b[i])) return false;
  }
  return true;
}

bool row_less(const Row& a, const Row& b) {
  for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const int c = cell_order(a[i], b[i]);
    if (c != 0) return c < 0;
  }
  return a.size() < b.size();
}

}  // namespace

bool compare(const Denotation& a, const Denotation& b) {
  if (a.column_count != b.column_count) return false;
  if (a.rows.size() != b.rows.size()) return false;
  if (a.ordered || b.ordered) {
    for (size_t i = 0; i < a.rows.size(); ++i) {
      if (!rows_equal(a.rows[i], b.rows[i])) return false;
    }
    return true;
  }
  std::vector<const Row*> x, y;
  for (const auto& r : a.rows) x.push_back(&r);
  for (const auto& r : b.rows) y.push_back(&r);
  auto less = [](const Row* p, const Row* q) { return row_less(*p, *q); };
  std::sort(x.begin(), x.end(), less);
  std::sort(y.begin(), y.end(), less);
  for (size_t i = 0; i < x.size(); ++i) {
    if (!rows_equal(*x[i], *y[i])) return false;
  }
  return true;
}

bool is_empty_output(const Denotation& d, const Query& gold, bool count_one_as_empty) {
  if (d.rows.empty()) return true;
  if (!selects_only_aggregates(gold)) return false;
  for (const auto& row : d.rows) {
    for (const auto& cell : row) {
      if (is_null(cell)) continue;
      const Key k = key_of(cell);
      if (k.rank != Rank::kNumber) return false;
      if (k.number == 0.0) continue;
      if (count_one_as_empty && k.number == 1.0) continue;
      return false;
    }
  }
  return true;
}

nlohmann::json denotation_to_json(const Denotation& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : d.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& cell : row) r.push_back(cell_to_json(cell));
    rows.push_back(std::move(r));
  }
  return {{"columns", d.columns},
          {"column_count", d.column_count},
          {"ordered", d.ordered},
          {"rows", std::move(rows)}};
}

Denotation denotation_from_json(const nlohmann::json& j) {
  Denotation d;
  if (j.contains("columns")) d.columns = j.at("columns").get<std::vector<std::string>>();
  d.column_count = j.value("column_count", d.columns.size());
  d.ordered = j.value("ordered", false);
  for (const auto& r : j.at("rows")) {
    Row row;
    for (const auto& cell : r) row.push_back(cell_from_json(cell));
    d.rows.push_back(std::move(row));
  }
  return d;
}

}  // namespace gsql
