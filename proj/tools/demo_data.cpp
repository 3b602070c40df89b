#include <iostream>

#include "CLI11.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Writes the synthetic demo corpus (databases, candidates, config)"};
  std::string fixtures, out;
  std::uint64_t seed = 7;
  app.add_option("--fixtures", fixtures, "directory with tables.json, examples.json and *.sql")->required();
  app.add_option("--out", out, "output directory")->required();
  app.add_option("--seed", seed, "corpus seed");
  CLI11_PARSE(app, argc, argv);
  try {
    gsql::testing::SyntheticOptions options;
    options.seed = seed;
    const auto planted = gsql::testing::write_demo_corpus(fixtures, out, options);
    int fps = 0;
    for (const auto& p : planted) fps += p.false_positive;
    std::cout << planted.size() << " questions, " << fps << " planted false positives\n";
  } catch (const std::exception& e) {
    std::cerr << "gsql_demo_data: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
