#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace gsql {

enum class ColumnType { kText, kInteger, kReal, kBoolean, kDateTime };

std::string_view column_type_name(ColumnType type);
bool is_numeric(ColumnType type);

// A column of a concrete table. Names are stored lower-case.
struct ColumnId {
  std::string table;
  std::string column;

  std::string qualified() const { return table + "." + column; }
  auto operator<=>(const ColumnId&) const = default;
};

struct Column {
  std::string name;
  ColumnType type = ColumnType::kText;
};

struct Table {
  std::string name;
  std::vector<Column> columns;

  const Column* find_column(std::string_view name) const;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Schema {
  std::string db_id;
  std::vector<Table> tables;
  std::vector<ColumnId> primary_keys;
  // (child, parent)
  std::vector<std::pair<ColumnId, ColumnId>> foreign_keys;

  const Table* find_table(std::string_view name) const;
  const Column* find_column(const ColumnId& id) const;
  bool is_primary_key(const ColumnId& id) const;
  std::vector<ColumnId> primary_key_of(std::string_view table) const;
  std::optional<ColumnId> parent_of(const ColumnId& child) const;

  // Throws SchemaError when names collide or key endpoints dangle.
  void validate() const;
};

std::string to_lower(std::string_view text);

// Spider `tables.json` ingestion. "number" columns map to integer; callers
// refine them from the database file's declared types.
Schema schema_from_spider_json(const nlohmann::json& entry);
std::vector<Schema> load_spider_tables(const std::filesystem::path& path);
nlohmann::json schema_to_spider_json(const Schema& schema);

// Maps a SQLite declared column type to a semantic type.
ColumnType column_type_from_declared(std::string_view declared,
                                     ColumnType fallback);

}  // namespace gsql
