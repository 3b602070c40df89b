#pragma once

#include <condition_variable>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gsql/database.hpp"
#include "gsql/denotation.hpp"

namespace gsql {

struct ExecSuccess {
  Denotation denotation;
  double wall_seconds = 0;
};
struct ExecError {
  std::string message;
};
struct ExecTimeout {
  double limit_seconds = 0;
  double wall_seconds = 0;  // query start to the moment the timeout was noticed
};

using ExecutionOutcome = std::variant<ExecSuccess, ExecError, ExecTimeout>;

inline bool is_success(const ExecutionOutcome& o) { return std::holds_alternative<ExecSuccess>(o); }
inline const Denotation* denotation_of(const ExecutionOutcome& o) {
  const auto* s = std::get_if<ExecSuccess>(&o);
  return s ? &s->denotation : nullptr;
}
// The pointer would dangle.
const Denotation* denotation_of(ExecutionOutcome&&) = delete;
std::string describe(const ExecutionOutcome& o);

inline constexpr double kMultiDbTimeLimit = 30.0;
inline constexpr double kSingleDbTimeLimit = 300.0;

enum class Isolation {
  kProcess,    // one forked worker per query; survives engine crashes
  kInProcess,  // progress-handler deadline only; for tools and debugging
};

struct ExecutorOptions {
  // 0 means GSQL_WORKERS, else the hardware thread count.
  int workers = 0;
  Isolation isolation = Isolation::kProcess;
  // Registers gsql_crash(), which aborts the worker. Tests only.
  bool fault_injection = false;
  // Results larger than this become an Error.
  std::size_t max_rows = 1'000'000;
};

struct ExecRequest {
  std::string sql;
  const DatabaseInstance* db = nullptr;
  double time_limit = kMultiDbTimeLimit;
};

class Executor {
 public:
  explicit Executor(ExecutorOptions options = {});

  // Thread-safe. Never throws for engine-side failures.
  ExecutionOutcome execute(std::string_view sql, const DatabaseInstance& db,
                           double time_limit) const;
  // Runs up to `workers` queries at a time; outcomes follow request order.
  std::vector<ExecutionOutcome> execute_batch(const std::vector<ExecRequest>& requests) const;

  int workers() const { return workers_; }
  const ExecutorOptions& options() const { return options_; }

 private:
  ExecutionOutcome run_in_process(const ExecRequest& request) const;
  std::vector<ExecutionOutcome> run_forked(const std::vector<ExecRequest>& requests) const;

  void acquire(int n) const;
  void release(int n) const;

  ExecutorOptions options_;
  int workers_ = 1;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable int busy_ = 0;
};

int default_worker_count();

}  // namespace gsql
