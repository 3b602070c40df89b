#include "gsql/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace gsql {

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view column_type_name(ColumnType type) {
  switch (type) {
    case ColumnType::kText: return "text";
    case ColumnType::kInteger: return "integer";
    case ColumnType::kReal: return "real";
    case ColumnType::kBoolean: return "boolean";
    case ColumnType::kDateTime: return "time";
  }
  return "text";
}

bool is_numeric(ColumnType type) {
  return type == ColumnType::kInteger || type == ColumnType::kReal ||
         type == ColumnType::kBoolean;
}

const Column* Table::find_column(std::string_view name) const {
  const std::string key = to_lower(name);
  for (const auto& column : columns) {
    if (column.name == key) return &column;
  }
  return nullptr;
}

const Table* Schema::find_table(std::string_view name) const {
  const std::string key = to_lower(name);
  for (const auto& table : tables) {
    if (table.name == key) return &table;
  }
  return nullptr;
}

const Column* Schema::find_column(const ColumnId& id) const {
  const Table* table = find_table(id.table);
  return table ? table->find_column(id.column) : nullptr;
}

bool Schema::is_primary_key(const ColumnId& id) const {
  return std::find(primary_keys.begin(), primary_keys.end(), id) !=
         primary_keys.end();
}

std::vector<ColumnId> Schema::primary_key_of(std::string_view table) const {
  std::vector<ColumnId> out;
  for (const auto& pk : primary_keys) {
    if (pk.table == table) out.push_back(pk);
  }
  return out;
}

std::optional<ColumnId> Schema::parent_of(const ColumnId& child) const {
  for (const auto& [c, p] : foreign_keys) {
    if (c == child) return p;
  }
  return std::nullopt;
}

void Schema::validate() const {
  std::set<std::string> table_names;
  for (const auto& table : tables) {
    if (table.name.empty()) throw SchemaError("empty table name");
    if (!table_names.insert(to_lower(table.name)).second) {
      throw SchemaError("duplicate table '" + table.name + "'");
    }
    std::set<std::string> column_names;
    for (const auto& column : table.columns) {
      if (!column_names.insert(to_lower(column.name)).second) {
        throw SchemaError("duplicate column '" + table.name + "." +
                          column.name + "'");
      }
    }
  }
  for (const auto& pk : primary_keys) {
    if (!find_column(pk)) {
      throw SchemaError("primary key names unknown column " + pk.qualified());
    }
  }
  for (const auto& [child, parent] : foreign_keys) {
    if (!find_column(child) || !find_column(parent)) {
      throw SchemaError("foreign key " + child.qualified() + " -> " +
                        parent.qualified() + " names an unknown column");
    }
  }
}

namespace {

ColumnType spider_type(std::string_view name) {
  const std::string t = to_lower(name);
  if (t == "number" || t == "integer" || t == "int") return ColumnType::kInteger;
  if (t == "real" || t == "float" || t == "double") return ColumnType::kReal;
  if (t == "boolean" || t == "bool") return ColumnType::kBoolean;
  if (t == "time" || t == "date" || t == "datetime") return ColumnType::kDateTime;
  return ColumnType::kText;
}

}  // namespace

ColumnType column_type_from_declared(std::string_view declared,
                                     ColumnType fallback) {
  const std::string t = to_lower(declared);
  if (t.empty()) return fallback;
  if (t.find("bool") != std::string::npos) return ColumnType::kBoolean;
  if (t.find("int") != std::string::npos) return ColumnType::kInteger;
  if (t.find("real") != std::string::npos || t.find("floa") != std::string::npos ||
      t.find("doub") != std::string::npos || t.find("dec") != std::string::npos ||
      t.find("numeric") != std::string::npos) {
    return ColumnType::kReal;
  }
  if (t.find("date") != std::string::npos || t.find("time") != std::string::npos) {
    return ColumnType::kDateTime;
  }
  if (t.find("char") != std::string::npos || t.find("text") != std::string::npos ||
      t.find("clob") != std::string::npos) {
    return ColumnType::kText;
  }
  return fallback;
}

Schema schema_from_spider_json(const nlohmann::json& entry) {
  Schema schema;
  schema.db_id = entry.at("db_id").get<std::string>();
  for (const auto& name : entry.at("table_names_original")) {
    schema.tables.push_back(Table{to_lower(name.get<std::string>()), {}});
  }
  const auto& columns = entry.at("column_names_original");
  const auto& types = entry.at("column_types");
  if (columns.size() != types.size()) {
    throw SchemaError(schema.db_id + ": column_types length mismatch");
  }
  // Column index -> ColumnId; index 0 is the Spider "*" placeholder.
  std::vector<std::optional<ColumnId>> by_index(columns.size());
  for (size_t i = 0; i < columns.size(); ++i) {
    const int table_index = columns[i].at(0).get<int>();
    if (table_index < 0) continue;
    if (static_cast<size_t>(table_index) >= schema.tables.size()) {
      throw SchemaError(schema.db_id + ": column refers to unknown table index");
    }
    auto& table = schema.tables[table_index];
    Column column{to_lower(columns[i].at(1).get<std::string>()),
                  spider_type(types[i].get<std::string>())};
    by_index[i] = ColumnId{table.name, column.name};
    table.columns.push_back(std::move(column));
  }
  auto lookup = [&](const nlohmann::json& index) -> ColumnId {
    const auto i = index.get<size_t>();
    if (i >= by_index.size() || !by_index[i]) {
      throw SchemaError(schema.db_id + ": key refers to unknown column index");
    }
    return *by_index[i];
  };
  if (entry.contains("primary_keys")) {
    for (const auto& pk : entry.at("primary_keys")) {
      if (pk.is_array()) {
        for (const auto& part : pk) schema.primary_keys.push_back(lookup(part));
      } else {
        schema.primary_keys.push_back(lookup(pk));
      }
    }
  }
  if (entry.contains("foreign_keys")) {
    for (const auto& fk : entry.at("foreign_keys")) {
      schema.foreign_keys.emplace_back(lookup(fk.at(0)), lookup(fk.at(1)));
    }
  }
  schema.validate();
  return schema;
}

std::vector<Schema> load_spider_tables(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  const auto doc = nlohmann::json::parse(in);
  std::vector<Schema> out;
  for (const auto& entry : doc) out.push_back(schema_from_spider_json(entry));
  return out;
}

nlohmann::json schema_to_spider_json(const Schema& schema) {
  nlohmann::json entry;
  entry["db_id"] = schema.db_id;
  nlohmann::json table_names = nlohmann::json::array();
  nlohmann::json columns = nlohmann::json::array({nlohmann::json::array({-1, "*"})});
  nlohmann::json types = nlohmann::json::array({"text"});
  std::vector<ColumnId> index;
  index.push_back({"", "*"});
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    table_names.push_back(schema.tables[t].name);
    for (const auto& column : schema.tables[t].columns) {
      columns.push_back(nlohmann::json::array({static_cast<int>(t), column.name}));
      types.push_back(std::string(column_type_name(column.type)));
      index.push_back({schema.tables[t].name, column.name});
    }
  }
  auto position = [&](const ColumnId& id) {
    return static_cast<int>(std::find(index.begin(), index.end(), id) - index.begin());
  };
  nlohmann::json pks = nlohmann::json::array();
  for (const auto& pk : schema.primary_keys) pks.push_back(position(pk));
  nlohmann::json fks = nlohmann::json::array();
  for (const auto& [c, p] : schema.foreign_keys) {
    fks.push_back(nlohmann::json::array({position(c), position(p)}));
  }
  entry["table_names_original"] = table_names;
  entry["table_names"] = table_names;
  entry["column_names_original"] = columns;
  entry["column_names"] = columns;
  entry["column_types"] = types;
  entry["primary_keys"] = pks;
  entry["foreign_keys"] = fks;
  return entry;
}

}  // namespace gsql
