#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "gsql/denotation.hpp"
#include "gsql/schema.hpp"

namespace gsql {

struct Provenance {
  enum class Kind { kOriginal, kFuzzed };
  Kind kind = Kind::kOriginal;
  std::uint64_t seed = 0;
};

class DatabaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A concrete database: schema, typed rows and the serialized SQLite image
// the executor hands to its workers. Immutable once built.
class DatabaseInstance {
 public:
  // rows[i] belongs to schema.tables[i]; cells are in column order.
  static DatabaseInstance from_rows(Schema schema, std::vector<std::vector<Row>> rows,
                                    Provenance provenance);
  // Loads a SQLite file. Column types are refined from declared types.
  static DatabaseInstance load(const std::filesystem::path& path, const Schema& schema,
                               Provenance provenance = {});

  void save(const std::filesystem::path& path) const;

  const Schema& schema() const { return *schema_; }
  const std::vector<Row>& rows(size_t table_index) const { return (*rows_)[table_index]; }
  const std::vector<Row>* rows(std::string_view table) const;
  const Provenance& provenance() const { return provenance_; }
  // Bytes of a complete SQLite database file.
  const std::string& image() const { return *image_; }
  std::size_t byte_size() const { return image_->size(); }

  // Empty when the PK/FK/type invariants hold; otherwise one line per problem.
  std::vector<std::string> check_constraints() const;

 private:
  std::shared_ptr<const Schema> schema_;
  std::shared_ptr<const std::vector<std::vector<Row>>> rows_;
  std::shared_ptr<const std::string> image_;
  Provenance provenance_;
};

std::string sqlite_declared_type(ColumnType type);

}  // namespace gsql
