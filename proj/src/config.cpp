#include "gsql/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace gsql {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const nlohmann::json& j, const std::string& where,
                    const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown config key " + where + "." + key);
  }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for ") + key + ": " + e.what());
  }
}

void read_path(const nlohmann::json& j, const char* key, const fs::path& base, fs::path& out) {
  std::string s;
  read(j, key, s);
  if (s.empty()) return;
  fs::path p(s);
  out = p.is_absolute() || base.empty() ? p : base / p;
}

CabSchedule schedule_from_json(const nlohmann::json& j) {
  CabSchedule s;
  if (j.is_array()) {
    for (const auto& stage : j) {
      if (!stage.is_array() || stage.size() != 2) throw ConfigError("schedule stages are [beam, width]");
      s.beam_sizes.push_back(stage[0].get<int>());
      s.widths.push_back(stage[1].get<int>());
    }
  } else {
    reject_unknown(j, "search.schedule", {"beam_sizes", "widths"});
    s.beam_sizes = j.at("beam_sizes").get<std::vector<int>>();
    s.widths = j.at("widths").get<std::vector<int>>();
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

}  // namespace

double RunConfig::effective_time_limit() const {
  if (time_limit) return *time_limit;
  return dataset.kind == "single" ? kSingleDbTimeLimit : kMultiDbTimeLimit;
}

MethodConfig RunConfig::method_config() const {
  MethodConfig m;
  m.method = method_from_name(search.method);
  CabSchedule schedule = search.schedule ? *search.schedule : CabSchedule::preset(search.preset);
  if (search.beam_cap > 0) schedule = schedule.capped(search.beam_cap);
  m.schedule = schedule;
  m.temperature = search.temperature;
  m.top_k = search.top_k;
  m.top_p = search.top_p;
  m.seed = search.seed;
  m.max_iterations = search.max_iterations;
  m.beam_size = search.beam_size;
  m.width = search.width;
  return m;
}

RunConfig config_from_json(const nlohmann::json& j, const fs::path& base) {
  RunConfig c;
  reject_unknown(j, "config",
                 {"dataset", "scorer", "search", "criterion", "suite", "time_limit", "workers",
                  "jobs", "output_dir"});
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown(d, "dataset", {"examples", "tables", "database_dir", "kind"});
    read_path(d, "examples", base, c.dataset.examples);
    read_path(d, "tables", base, c.dataset.tables);
    read_path(d, "database_dir", base, c.dataset.database_dir);
    read(d, "kind", c.dataset.kind);
    if (c.dataset.kind != "multi" && c.dataset.kind != "single") {
      throw ConfigError("dataset.kind must be 'multi' or 'single'");
    }
  }
  if (j.contains("scorer")) {
    const auto& s = j.at("scorer");
    reject_unknown(s, "scorer", {"kind", "path", "order", "alpha", "max_length"});
    read(s, "kind", c.scorer.kind);
    read_path(s, "path", base, c.scorer.path);
    read(s, "order", c.scorer.order);
    read(s, "alpha", c.scorer.alpha);
    read(s, "max_length", c.scorer.max_length);
    if (c.scorer.kind != "candidates" && c.scorer.kind != "ngram" && c.scorer.kind != "replay") {
      throw ConfigError("scorer.kind must be candidates, ngram or replay");
    }
    if (!(c.scorer.alpha > 0)) throw ConfigError("scorer.alpha must be positive");
  }
  if (j.contains("search")) {
    const auto& s = j.at("search");
    reject_unknown(s, "search",
                   {"method", "preset", "schedule", "beam_cap", "seed", "temperature", "top_k",
                    "top_p", "max_iterations", "beam_size", "width", "log_candidates"});
    read(s, "method", c.search.method);
    read(s, "preset", c.search.preset);
    if (s.contains("schedule") && !s.at("schedule").is_null()) {
      c.search.schedule = schedule_from_json(s.at("schedule"));
    }
    read(s, "beam_cap", c.search.beam_cap);
    read(s, "seed", c.search.seed);
    read(s, "temperature", c.search.temperature);
    read(s, "top_k", c.search.top_k);
    read(s, "top_p", c.search.top_p);
    read(s, "max_iterations", c.search.max_iterations);
    read(s, "beam_size", c.search.beam_size);
    read(s, "width", c.search.width);
    read(s, "log_candidates", c.search.log_candidates);
    try {
      method_from_name(c.search.method);
      if (!c.search.schedule) CabSchedule::preset(c.search.preset);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!(c.search.temperature > 0)) throw ConfigError("search.temperature must be positive");
  }
  if (j.contains("criterion")) {
    const auto& s = j.at("criterion");
    reject_unknown(s, "criterion", {"kind", "column_mode"});
    read(s, "kind", c.criterion.kind);
    read(s, "column_mode", c.criterion.column_mode);
    static const std::set<std::string> kinds = {"execution", "column-match", "one-test",
                                                "test-suite"};
    if (!kinds.count(c.criterion.kind)) throw ConfigError("unknown criterion " + c.criterion.kind);
    if (c.criterion.column_mode != "multiset" && c.criterion.column_mode != "ordered") {
      throw ConfigError("criterion.column_mode must be multiset or ordered");
    }
  }
  if (j.contains("suite")) {
    const auto& s = j.at("suite");
    reject_unknown(s, "suite",
                   {"dir", "max_dbs", "max_attempts", "nonempty_attempts", "neighbors",
                    "heldout_neighbors", "seed", "count_one_as_empty", "prune", "row_cap",
                    "hint_mass", "widen_probability", "null_probability", "pool_probability",
                    "text_pool_probability"});
    read_path(s, "dir", base, c.suite_dir);
    read(s, "max_dbs", c.suite.max_dbs);
    read(s, "max_attempts", c.suite.max_attempts);
    read(s, "nonempty_attempts", c.suite.nonempty_attempts);
    read(s, "neighbors", c.suite.neighbors);
    read(s, "heldout_neighbors", c.suite.heldout_neighbors);
    read(s, "seed", c.suite.seed);
    read(s, "count_one_as_empty", c.suite.count_one_as_empty);
    read(s, "prune", c.suite.prune);
    read(s, "row_cap", c.suite.fuzz.row_cap);
    read(s, "hint_mass", c.suite.fuzz.hint_mass);
    read(s, "widen_probability", c.suite.fuzz.widen_probability);
    read(s, "null_probability", c.suite.fuzz.null_probability);
    read(s, "pool_probability", c.suite.fuzz.pool_probability);
    read(s, "text_pool_probability", c.suite.fuzz.text_pool_probability);
    if (c.suite.max_dbs < 1 || c.suite.max_attempts < 1 || c.suite.nonempty_attempts < 1 ||
        c.suite.fuzz.row_cap < 1) {
      throw ConfigError("suite limits must be positive");
    }
  }
  if (j.contains("time_limit") && !j.at("time_limit").is_null()) {
    c.time_limit = j.at("time_limit").get<double>();
    if (!(*c.time_limit > 0)) throw ConfigError("time_limit must be positive");
  }
  read(j, "workers", c.workers);
  read(j, "jobs", c.jobs);
  if (c.jobs < 1) throw ConfigError("jobs must be at least 1");
  read_path(j, "output_dir", base, c.output_dir);
  if (c.suite_dir.empty()) c.suite_dir = c.output_dir / "suites";
  c.suite.time_limit = c.effective_time_limit();
  return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json schedule = nullptr;
  if (c.search.schedule) {
    schedule = nlohmann::json::array();
    for (size_t i = 0; i < c.search.schedule->beam_sizes.size(); ++i) {
      schedule.push_back({c.search.schedule->beam_sizes[i], c.search.schedule->widths[i]});
    }
  }
  return {
      {"dataset",
       {{"examples", c.dataset.examples.string()},
        {"tables", c.dataset.tables.string()},
        {"database_dir", c.dataset.database_dir.string()},
        {"kind", c.dataset.kind}}},
      {"scorer",
       {{"kind", c.scorer.kind},
        {"path", c.scorer.path.string()},
        {"order", c.scorer.order},
        {"alpha", c.scorer.alpha},
        {"max_length", c.scorer.max_length}}},
      {"search",
       {{"method", c.search.method},
        {"preset", c.search.preset},
        {"schedule", schedule},
        {"beam_cap", c.search.beam_cap},
        {"seed", c.search.seed},
        {"temperature", c.search.temperature},
        {"top_k", c.search.top_k},
        {"top_p", c.search.top_p},
        {"max_iterations", c.search.max_iterations},
        {"beam_size", c.search.beam_size},
        {"width", c.search.width},
        {"log_candidates", c.search.log_candidates}}},
      {"criterion", {{"kind", c.criterion.kind}, {"column_mode", c.criterion.column_mode}}},
      {"suite",
       {{"dir", c.suite_dir.string()},
        {"max_dbs", c.suite.max_dbs},
        {"max_attempts", c.suite.max_attempts},
        {"nonempty_attempts", c.suite.nonempty_attempts},
        {"neighbors", c.suite.neighbors},
        {"heldout_neighbors", c.suite.heldout_neighbors},
        {"seed", c.suite.seed},
        {"count_one_as_empty", c.suite.count_one_as_empty},
        {"prune", c.suite.prune},
        {"row_cap", c.suite.fuzz.row_cap},
        {"hint_mass", c.suite.fuzz.hint_mass},
        {"widen_probability", c.suite.fuzz.widen_probability},
        {"null_probability", c.suite.fuzz.null_probability},
        {"pool_probability", c.suite.fuzz.pool_probability},
        {"text_pool_probability", c.suite.fuzz.text_pool_probability}}},
      {"time_limit", c.time_limit ? nlohmann::json(*c.time_limit) : nlohmann::json(nullptr)},
      {"workers", c.workers},
      {"jobs", c.jobs},
      {"output_dir", c.output_dir.string()},
  };
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must be key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  nlohmann::json* node = &j;
  size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("bad override key " + key);
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

nlohmann::json load_config_json(const std::optional<fs::path>& path,
                                const std::vector<std::string>& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config " + path->string());
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config " + path->string() + ": " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  return j;
}

void validate_paths(const RunConfig& c, bool need_scorer, bool need_suites) {
  auto require = [](const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(std::string(what) + " is not configured");
    if (!fs::exists(p)) throw ConfigError(std::string(what) + " does not exist: " + p.string());
  };
  require(c.dataset.examples, "dataset.examples");
  require(c.dataset.tables, "dataset.tables");
  require(c.dataset.database_dir, "dataset.database_dir");
  if (need_scorer) require(c.scorer.path, "scorer.path");
  if (need_suites) require(c.suite_dir, "suite.dir");
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& config) {
  nlohmann::json j = config_to_json(config);
  j.erase("output_dir");
  j.erase("jobs");
  j.erase("workers");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

SweepAxis parse_sweep(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("sweep must be key=values: " + spec);
  SweepAxis axis;
  axis.key = spec.substr(0, eq);
  const std::string rest = spec.substr(eq + 1);
  if (std::count(rest.begin(), rest.end(), ':') == 2) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(rest.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || !(step > 0) || hi < lo) {
      throw ConfigError("bad sweep range " + rest);
    }
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) axis.values.emplace_back(lo + step * i);
    return axis;
  }
  size_t start = 0;
  while (start <= rest.size()) {
    const auto comma = rest.find(',', start);
    const std::string raw = rest.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!raw.empty()) {
      nlohmann::json v = nlohmann::json::parse(raw, nullptr, false);
      axis.values.push_back(v.is_discarded() ? nlohmann::json(raw) : v);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (axis.values.empty()) throw ConfigError("sweep has no values: " + spec);
  return axis;
}

}  // namespace gsql
