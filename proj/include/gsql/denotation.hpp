#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace gsql {

struct Query;

using Cell = std::variant<std::monostate, std::int64_t, double, std::string, bool>;
using Row = std::vector<Cell>;

inline bool is_null(const Cell& c) { return std::holds_alternative<std::monostate>(c); }
std::string cell_to_string(const Cell& c);
nlohmann::json cell_to_json(const Cell& c);
Cell cell_from_json(const nlohmann::json& j);

struct Denotation {
  std::vector<std::string> columns;  // informational; never compared
  std::size_t column_count = 0;
  std::vector<Row> rows;
  bool ordered = false;  // producing query had a top-level ORDER BY

  bool operator==(const Denotation&) const = default;
};

// Rounds to an 11-bit significand, the precision of an IEEE half float.
double round_to_half_precision(double x);

// Column counts must agree. Ordered if either side is ordered, multiset
// otherwise. Reals are rounded first, then compared with relative
// tolerance 1e-6. Null equals null and sorts first.
bool compare(const Denotation& a, const Denotation& b);

inline constexpr double kRelativeTolerance = 1e-6;

// No rows, or an all-aggregate gold whose every cell is 0 or null. With
// `count_one_as_empty`, a value of 1 also counts as empty.
bool is_empty_output(const Denotation& d, const Query& gold, bool count_one_as_empty = false);

nlohmann::json denotation_to_json(const Denotation& d);
Denotation denotation_from_json(const nlohmann::json& j);

}  // namespace gsql
