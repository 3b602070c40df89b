#include <iostream>

#include "CLI11.hpp"
#include "gsql/commands.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Criterion-guided search over SQL generation and per-query test suites"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "JSON run config");
    cmd->add_option("--set", overrides, "override a config key, e.g. search.method=topk")
        ->take_all();
  };

  auto* build = app.add_subcommand("build-suite", "fuzz and keep distinguishing databases per gold query");
  auto* stats = app.add_subcommand("suite-stats", "NoEmpty / Cover / Tests / Time / Size of built suites");
  auto* search = app.add_subcommand("search", "criterion-guided search, one verdict per example");
  auto* evaluate = app.add_subcommand("evaluate", "subset-EM, execution and test-suite accuracy");
  auto* sweep = app.add_subcommand("sweep", "search + evaluate over a config grid");
  for (auto* cmd : {build, stats, search, evaluate, sweep}) add_common(cmd);

  std::string verdicts;
  evaluate->add_option("--verdicts", verdicts, "verdicts file (default <output_dir>/verdicts.jsonl)");
  std::vector<std::string> axes;
  sweep->add_option("--sweep", axes, "key=v1,v2,... or key=start:stop:step")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<fs::path> path;
    if (!config_path.empty()) path = fs::path(config_path);
    const fs::path base = path ? fs::absolute(*path).parent_path() : fs::current_path();
    const nlohmann::json j = gsql::load_config_json(path, overrides);
    if (sweep->parsed()) return gsql::cmd_sweep(j, base, axes, std::cout, std::cerr);
    const gsql::RunConfig config = gsql::config_from_json(j, base);
    if (build->parsed()) return gsql::cmd_build_suite(config, std::cout, std::cerr);
    if (stats->parsed()) return gsql::cmd_suite_stats(config, std::cout, std::cerr);
    if (search->parsed()) return gsql::cmd_search(config, std::cout, std::cerr);
    if (evaluate->parsed()) return gsql::cmd_evaluate(config, verdicts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "gsql: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
