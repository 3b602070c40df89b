#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gsql/config.hpp"
#include "gsql/database.hpp"
#include "gsql/schema.hpp"

namespace gsql {

struct DatasetExample {
  std::string question_id;
  std::string question;
  std::string query;
  std::string db_id;
};

// Spider layout: examples JSON list, tables.json, and
// <database_dir>/<db_id>/<db_id>.sqlite.
class Dataset {
 public:
  static Dataset load(const DatasetConfig& config);

  const std::vector<DatasetExample>& examples() const { return examples_; }
  // Loads on first use; the schema it carries has types refined from the
  // file. Thread-safe.
  const DatabaseInstance& database(const std::string& db_id) const;
  const Schema& schema(const std::string& db_id) const { return database(db_id).schema(); }

 private:
  std::vector<DatasetExample> examples_;
  std::map<std::string, Schema> schemas_;
  std::filesystem::path database_dir_;
  std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
  mutable std::map<std::string, std::unique_ptr<DatabaseInstance>> databases_;
};

std::filesystem::path database_path(const std::filesystem::path& database_dir,
                                    const std::string& db_id);

// Question ids come from "question_id" or "id"; otherwise q0000, q0001, ...
std::vector<DatasetExample> load_examples(const std::filesystem::path& path);

}  // namespace gsql
