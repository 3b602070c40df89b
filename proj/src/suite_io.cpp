#include <cstdio>
#include <fstream>

#include "gsql/testsuite.hpp"

namespace gsql {

namespace fs = std::filesystem;

namespace {

std::string numbered(const char* stem, size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu.%s", stem, i, ext);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace

void save_suite(const TestSuite& suite, const fs::path& dir, const nlohmann::json& extra_manifest) {
  fs::create_directories(dir);
  // A stale manifest would describe the wrong files; it goes first.
  fs::remove(dir / "manifest.json");
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("db_", 0) == 0 || name.rfind("gold_", 0) == 0) fs::remove(entry.path());
  }

  nlohmann::json dbs = nlohmann::json::array();
  for (size_t i = 0; i < suite.databases.size(); ++i) {
    const auto& entry = suite.databases[i];
    const std::string db_file = numbered("db", i, "sqlite");
    const std::string gold_file = numbered("gold", i, "json");
    write_text(dir / db_file, entry.db.image());
    write_text(dir / gold_file, denotation_to_json(entry.gold).dump(1) + "\n");
    dbs.push_back({{"file", db_file}, {"gold", gold_file}, {"seed", entry.seed}});
  }

  nlohmann::json manifest = extra_manifest.is_object() ? extra_manifest : nlohmann::json::object();
  manifest["query_id"] = suite.query_id;
  manifest["gold_sql"] = suite.gold_sql;
  manifest["seed"] = suite.seed;
  manifest["databases"] = dbs;
  manifest["neighbors"] = suite.neighbor_sql;
  manifest["distinguished_by"] = suite.distinguished_by;
  manifest["nonempty_found"] = suite.nonempty_found;
  manifest["attempts"] = suite.attempts;
  write_text(dir / "manifest.json", manifest.dump(1) + "\n");
}

TestSuite load_suite(const fs::path& dir, const Schema& schema) {
  const nlohmann::json manifest = read_json(dir / "manifest.json");
  TestSuite suite;
  suite.query_id = manifest.at("query_id").get<std::string>();
  suite.gold_sql = manifest.at("gold_sql").get<std::string>();
  suite.seed = manifest.value("seed", std::uint64_t{0});
  suite.neighbor_sql = manifest.value("neighbors", std::vector<std::string>{});
  suite.distinguished_by = manifest.value("distinguished_by", std::vector<int>{});
  suite.nonempty_found = manifest.value("nonempty_found", false);
  suite.attempts = manifest.value("attempts", 0);
  for (const auto& entry : manifest.at("databases")) {
    const auto seed = entry.value("seed", std::uint64_t{0});
    SuiteDatabase db{
        DatabaseInstance::load(dir / entry.at("file").get<std::string>(), schema,
                               {Provenance::Kind::kFuzzed, seed}),
        denotation_from_json(read_json(dir / entry.at("gold").get<std::string>())), seed};
    suite.databases.push_back(std::move(db));
  }
  return suite;
}

}  // namespace gsql
