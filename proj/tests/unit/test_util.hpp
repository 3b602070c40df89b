#pragma once

#include <gtest/gtest.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gsql/dataset.hpp"
#include "gsql/scorer.hpp"
#include "synthetic.hpp"
#include "toy_models.hpp"

namespace gsql::test {

inline std::filesystem::path fixtures_dir() { return GSQL_FIXTURES_DIR; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("gsql_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// The fixture databases, materialized once per test binary.
inline const Dataset& fixture_dataset() {
  static TempDir dir("fixture");
  static Dataset dataset = [] {
    testing::materialize_fixture(fixtures_dir(), dir.path());
    return Dataset::load({dir.path() / "examples.json", dir.path() / "tables.json",
                          dir.path() / "database", "multi"});
  }();
  return dataset;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

using testing::enumerate_sequences;
using testing::Enumerated;
using testing::random_toy_scorer;

}  // namespace gsql::test
