#include "gsql/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace gsql {

namespace fs = std::filesystem;

fs::path database_path(const fs::path& database_dir, const std::string& db_id) {
  return database_dir / db_id / (db_id + ".sqlite");
}

std::vector<DatasetExample> load_examples(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read examples " + path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  if (!j.is_array()) throw ConfigError("examples file must hold a JSON list");
  std::vector<DatasetExample> out;
  std::set<std::string> seen;
  for (size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    DatasetExample ex;
    if (e.contains("question_id")) {
      ex.question_id = e.at("question_id").get<std::string>();
    } else if (e.contains("id")) {
      ex.question_id = e.at("id").is_string() ? e.at("id").get<std::string>() : e.at("id").dump();
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "q%04zu", i);
      ex.question_id = buf;
    }
    ex.question = e.value("question", "");
    ex.query = e.at("query").get<std::string>();
    ex.db_id = e.at("db_id").get<std::string>();
    if (!seen.insert(ex.question_id).second) {
      throw ConfigError("duplicate question id " + ex.question_id);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

Dataset Dataset::load(const DatasetConfig& config) {
  Dataset d;
  d.examples_ = load_examples(config.examples);
  for (auto& schema : load_spider_tables(config.tables)) {
    std::string id = schema.db_id;
    d.schemas_.emplace(std::move(id), std::move(schema));
  }
  d.database_dir_ = config.database_dir;
  for (const auto& ex : d.examples_) {
    if (!d.schemas_.count(ex.db_id)) {
      throw ConfigError("example " + ex.question_id + " names unknown database " + ex.db_id);
    }
    if (!fs::exists(database_path(d.database_dir_, ex.db_id))) {
      throw ConfigError("missing database file " + database_path(d.database_dir_, ex.db_id).string());
    }
  }
  return d;
}

const DatabaseInstance& Dataset::database(const std::string& db_id) const {
  std::lock_guard lock(*mu_);
  auto it = databases_.find(db_id);
  if (it != databases_.end()) return *it->second;
  auto schema = schemas_.find(db_id);
  if (schema == schemas_.end()) throw ConfigError("unknown database " + db_id);
  auto db = std::make_unique<DatabaseInstance>(
      DatabaseInstance::load(database_path(database_dir_, db_id), schema->second));
  return *databases_.emplace(db_id, std::move(db)).first->second;
}

}  // namespace gsql
