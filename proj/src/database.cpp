#include "gsql/database.hpp"

#include <sqlite3.h>

#include <fstream>
#include <map>
#include <set>

namespace gsql {

namespace {

std::string quote_ident(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

class Connection {
 public:
  Connection(const std::string& path, int flags) {
    if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
      std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      throw DatabaseError("cannot open " + path + ": " + msg);
    }
  }
  ~Connection() { sqlite3_close(db_); }
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  sqlite3* get() const { return db_; }

  void exec(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      throw DatabaseError(msg + " in: " + sql);
    }
  }

  std::string serialize() const {
    sqlite3_int64 size = 0;
    unsigned char* data = sqlite3_serialize(db_, "main", &size, 0);
    if (!data) throw DatabaseError("serialize failed");
    std::string out(reinterpret_cast<const char*>(data), static_cast<size_t>(size));
    sqlite3_free(data);
    return out;
  }

 private:
  sqlite3* db_ = nullptr;
};

std::string create_table_sql(const Schema& schema, const Table& table) {
  std::string sql = "CREATE TABLE " + quote_ident(table.name) + " (";
  for (size_t i = 0; i < table.columns.size(); ++i) {
    if (i) sql += ", ";
    sql += quote_ident(table.columns[i].name) + " " + sqlite_declared_type(table.columns[i].type);
  }
  const auto pk = schema.primary_key_of(table.name);
  if (!pk.empty()) {
    sql += ", PRIMARY KEY (";
    for (size_t i = 0; i < pk.size(); ++i) {
      if (i) sql += ", ";
      sql += quote_ident(pk[i].column);
    }
    sql += ")";
  }
  for (const auto& [child, parent] : schema.foreign_keys) {
    if (child.table != table.name) continue;
    sql += ", FOREIGN KEY (" + quote_ident(child.column) + ") REFERENCES " +
           quote_ident(parent.table) + " (" + quote_ident(parent.column) + ")";
  }
  return sql + ")";
}

void bind_cell(sqlite3_stmt* stmt, int index, const Cell& cell) {
  if (is_null(cell)) {
    sqlite3_bind_null(stmt, index);
  } else if (const auto* i = std::get_if<std::int64_t>(&cell)) {
    sqlite3_bind_int64(stmt, index, *i);
  } else if (const auto* d = std::get_if<double>(&cell)) {
    sqlite3_bind_double(stmt, index, *d);
  } else if (const auto* b = std::get_if<bool>(&cell)) {
    sqlite3_bind_int64(stmt, index, *b ? 1 : 0);
  } else {
    const auto& s = std::get<std::string>(cell);
    sqlite3_bind_text(stmt, index, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT);
  }
}

Cell read_cell(sqlite3_stmt* stmt, int index) {
  switch (sqlite3_column_type(stmt, index)) {
    case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt, index));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt, index);
    case SQLITE_NULL: return std::monostate{};
    default: {
      const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, index));
      return std::string(text ? text : "", static_cast<size_t>(sqlite3_column_bytes(stmt, index)));
    }
  }
}

bool cell_conforms(const Cell& cell, ColumnType type) {
  if (is_null(cell)) return true;
  switch (type) {
    case ColumnType::kText:
    case ColumnType::kDateTime: return std::holds_alternative<std::string>(cell);
    case ColumnType::kInteger: return std::holds_alternative<std::int64_t>(cell);
    case ColumnType::kReal: return std::holds_alternative<double>(cell);
    case ColumnType::kBoolean: return std::holds_alternative<bool>(cell);
  }
  return false;
}

}  // namespace

std::string sqlite_declared_type(ColumnType type) {
  switch (type) {
    case ColumnType::kText: return "TEXT";
    case ColumnType::kInteger: return "INTEGER";
    case ColumnType::kReal: return "REAL";
    case ColumnType::kBoolean: return "BOOLEAN";
    case ColumnType::kDateTime: return "DATETIME";
  }
  return "TEXT";
}

DatabaseInstance DatabaseInstance::from_rows(Schema schema, std::vector<std::vector<Row>> rows,
                                             Provenance provenance) {
  if (rows.size() != schema.tables.size()) {
    throw DatabaseError("row sets do not match the schema's tables");
  }
  Connection conn(":memory:", SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
  conn.exec("BEGIN");
  for (size_t t = 0; t < schema.tables.size(); ++t) {
    const Table& table = schema.tables[t];
    conn.exec(create_table_sql(schema, table));
    std::string insert = "INSERT INTO " + quote_ident(table.name) + " VALUES (";
    for (size_t i = 0; i < table.columns.size(); ++i) insert += i ? ", ?" : "?";
    insert += ")";
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(conn.get(), insert.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
      throw DatabaseError(sqlite3_errmsg(conn.get()));
    }
    for (const auto& row : rows[t]) {
      if (row.size() != table.columns.size()) {
        sqlite3_finalize(stmt);
        throw DatabaseError("row width mismatch in table " + table.name);
      }
      for (size_t i = 0; i < row.size(); ++i) bind_cell(stmt, static_cast<int>(i + 1), row[i]);
      const int rc = sqlite3_step(stmt);
      sqlite3_reset(stmt);
      sqlite3_clear_bindings(stmt);
      if (rc != SQLITE_DONE) {
        std::string msg = sqlite3_errmsg(conn.get());
        sqlite3_finalize(stmt);
        throw DatabaseError("insert into " + table.name + " failed: " + msg);
      }
    }
    sqlite3_finalize(stmt);
  }
  conn.exec("COMMIT");

  DatabaseInstance db;
  db.image_ = std::make_shared<const std::string>(conn.serialize());
  db.schema_ = std::make_shared<const Schema>(std::move(schema));
  db.rows_ = std::make_shared<const std::vector<std::vector<Row>>>(std::move(rows));
  db.provenance_ = provenance;
  return db;
}

DatabaseInstance DatabaseInstance::load(const std::filesystem::path& path, const Schema& schema,
                                        Provenance provenance) {
  if (!std::filesystem::exists(path)) throw DatabaseError("missing database " + path.string());
  Connection conn(path.string(), SQLITE_OPEN_READONLY);
  Schema refined = schema;
  std::vector<std::vector<Row>> rows;
  for (auto& table : refined.tables) {
    std::map<std::string, std::string> declared;
    {
      sqlite3_stmt* stmt = nullptr;
      const std::string pragma = "PRAGMA table_info(" + quote_ident(table.name) + ")";
      sqlite3_prepare_v2(conn.get(), pragma.c_str(), -1, &stmt, nullptr);
      while (stmt && sqlite3_step(stmt) == SQLITE_ROW) {
        const auto* name = reinterpret_cast<const char*>(sqlite3_column_text(stmt, 1));
        const auto* type = reinterpret_cast<const char*>(sqlite3_column_text(stmt, 2));
        declared[to_lower(name ? name : "")] = type ? type : "";
      }
      sqlite3_finalize(stmt);
    }
    if (declared.empty()) throw DatabaseError("table " + table.name + " missing in " + path.string());
    std::string select = "SELECT ";
    for (size_t i = 0; i < table.columns.size(); ++i) {
      auto& column = table.columns[i];
      auto it = declared.find(column.name);
      if (it == declared.end()) {
        throw DatabaseError("column " + table.name + "." + column.name + " missing in file");
      }
      column.type = column_type_from_declared(it->second, column.type);
      if (i) select += ", ";
      select += quote_ident(column.name);
    }
    select += " FROM " + quote_ident(table.name) + " ORDER BY rowid";
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(conn.get(), select.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
      // WITHOUT ROWID tables have no rowid; natural order is fine there.
      select.resize(select.size() - std::string(" ORDER BY rowid").size());
      if (sqlite3_prepare_v2(conn.get(), select.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
        throw DatabaseError(sqlite3_errmsg(conn.get()));
      }
    }
    std::vector<Row> table_rows;
    while (sqlite3_step(stmt) == SQLITE_ROW) {
      Row row;
      for (int i = 0; i < static_cast<int>(table.columns.size()); ++i) {
        Cell c = read_cell(stmt, i);
        // SQLite keeps booleans as 0/1 integers.
        if (const auto* v = std::get_if<std::int64_t>(&c);
            v && table.columns[i].type == ColumnType::kBoolean && (*v == 0 || *v == 1)) {
          c = *v == 1;
        }
        row.push_back(std::move(c));
      }
      table_rows.push_back(std::move(row));
    }
    sqlite3_finalize(stmt);
    rows.push_back(std::move(table_rows));
  }

  DatabaseInstance db;
  db.image_ = std::make_shared<const std::string>(conn.serialize());
  db.schema_ = std::make_shared<const Schema>(std::move(refined));
  db.rows_ = std::make_shared<const std::vector<std::vector<Row>>>(std::move(rows));
  db.provenance_ = provenance;
  return db;
}

void DatabaseInstance::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(image_->data(), static_cast<std::streamsize>(image_->size()));
  if (!out) throw DatabaseError("cannot write " + path.string());
}

const std::vector<Row>* DatabaseInstance::rows(std::string_view table) const {
  const std::string key = to_lower(table);
  for (size_t i = 0; i < schema_->tables.size(); ++i) {
    if (schema_->tables[i].name == key) return &(*rows_)[i];
  }
  return nullptr;
}

std::vector<std::string> DatabaseInstance::check_constraints() const {
  std::vector<std::string> problems;
  const Schema& s = *schema_;
  auto column_index = [&](const ColumnId& id) -> std::pair<int, int> {
    for (size_t t = 0; t < s.tables.size(); ++t) {
      if (s.tables[t].name != id.table) continue;
      for (size_t c = 0; c < s.tables[t].columns.size(); ++c) {
        if (s.tables[t].columns[c].name == id.column) return {int(t), int(c)};
      }
    }
    return {-1, -1};
  };

  for (size_t t = 0; t < s.tables.size(); ++t) {
    const Table& table = s.tables[t];
    for (size_t r = 0; r < (*rows_)[t].size(); ++r) {
      const Row& row = (*rows_)[t][r];
      for (size_t c = 0; c < table.columns.size(); ++c) {
        if (!cell_conforms(row[c], table.columns[c].type)) {
          problems.push_back(table.name + "." + table.columns[c].name + " row " +
                             std::to_string(r) + " has the wrong cell type");
        }
      }
    }
    const auto pk = s.primary_key_of(table.name);
    if (pk.empty()) continue;
    std::vector<int> idx;
    for (const auto& id : pk) idx.push_back(column_index(id).second);
    std::set<std::string> seen;
    for (const auto& row : (*rows_)[t]) {
      std::string key;
      for (int i : idx) {
        if (is_null(row[i])) problems.push_back(table.name + " primary key has a null");
        key += cell_to_string(row[i]) + '\x1f';
      }
      if (!seen.insert(key).second) problems.push_back(table.name + " primary key duplicate " + key);
    }
  }

  for (const auto& [child, parent] : s.foreign_keys) {
    const auto [ct, cc] = column_index(child);
    const auto [pt, pc] = column_index(parent);
    if (ct < 0 || pt < 0) continue;
    std::set<std::string> keys;
    for (const auto& row : (*rows_)[pt]) {
      if (!is_null(row[pc])) keys.insert(cell_to_string(row[pc]));
    }
    for (const auto& row : (*rows_)[ct]) {
      if (!is_null(row[cc]) && !keys.count(cell_to_string(row[cc]))) {
        problems.push_back(child.qualified() + " references missing " + parent.qualified() +
                           " value " + cell_to_string(row[cc]));
      }
    }
  }
  return problems;
}

}  // namespace gsql
