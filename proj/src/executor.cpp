#include "gsql/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sqlite3.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "gsql/sql_lexer.hpp"

namespace gsql {

namespace {

using Clock = std::chrono::steady_clock;

void configure_sqlite_once() {
  static const bool done = [] {
    // The memory-status mutex is the one most likely to be held across a
    // fork; without it a worker never inherits a locked allocator lock.
    sqlite3_config(SQLITE_CONFIG_MEMSTATUS, 0);
    sqlite3_initialize();
    return true;
  }();
  (void)done;
}

void crash_function(sqlite3_context*, int, sqlite3_value**) { std::abort(); }

struct Deadline {
  Clock::time_point at;
  bool expired = false;
};

int on_progress(void* arg) {
  auto* d = static_cast<Deadline*>(arg);
  if (Clock::now() >= d->at) {
    d->expired = true;
    return 1;
  }
  return 0;
}

// What a worker sends back; the parent adds ordering and timing.
struct RawResult {
  enum class Kind : char { kSuccess = 'S', kError = 'E', kTimeout = 'T' } kind = Kind::kError;
  Denotation denotation;
  std::string message;
};

RawResult run_sql(const std::string& image, const std::string& sql, double time_limit,
                  std::size_t max_rows, bool fault_injection) {
  RawResult result;
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(":memory:", &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) !=
      SQLITE_OK) {
    result.message = "cannot open engine";
    sqlite3_close(db);
    return result;
  }
  auto* bytes = reinterpret_cast<unsigned char*>(const_cast<char*>(image.data()));
  const auto size = static_cast<sqlite3_int64>(image.size());
  if (sqlite3_deserialize(db, "main", bytes, size, size, SQLITE_DESERIALIZE_READONLY) !=
      SQLITE_OK) {
    result.message = std::string("cannot load database: ") + sqlite3_errmsg(db);
    sqlite3_close(db);
    return result;
  }
  if (fault_injection) {
    sqlite3_create_function(db, "gsql_crash", 0, SQLITE_UTF8, nullptr, crash_function, nullptr,
                            nullptr);
  }
  Deadline deadline{Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(time_limit))};
  sqlite3_progress_handler(db, 1000, on_progress, &deadline);

  sqlite3_stmt* stmt = nullptr;
  const char* tail = nullptr;
  if (sqlite3_prepare_v2(db, sql.c_str(), static_cast<int>(sql.size()), &stmt, &tail) !=
      SQLITE_OK) {
    result.kind = deadline.expired ? RawResult::Kind::kTimeout : RawResult::Kind::kError;
    result.message = sqlite3_errmsg(db);
    sqlite3_close(db);
    return result;
  }
  if (!stmt) {
    result.message = "empty statement";
    sqlite3_close(db);
    return result;
  }
  for (const char* p = tail; p && *p; ++p) {
    if (!std::isspace(static_cast<unsigned char>(*p)) && *p != ';') {
      result.message = "multiple statements";
      sqlite3_finalize(stmt);
      sqlite3_close(db);
      return result;
    }
  }
  if (!sqlite3_stmt_readonly(stmt)) {
    result.message = "statement is not read-only";
    sqlite3_finalize(stmt);
    sqlite3_close(db);
    return result;
  }

  const int ncol = sqlite3_column_count(stmt);
  result.denotation.column_count = static_cast<std::size_t>(ncol);
  for (int i = 0; i < ncol; ++i) {
    const char* name = sqlite3_column_name(stmt, i);
    result.denotation.columns.emplace_back(name ? name : "");
  }
  int rc;
  while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
    if (result.denotation.rows.size() >= max_rows) {
      rc = SQLITE_TOOBIG;
      break;
    }
    Row row;
    row.reserve(ncol);
    for (int i = 0; i < ncol; ++i) {
      switch (sqlite3_column_type(stmt, i)) {
        case SQLITE_INTEGER: row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(stmt, i))); break;
        case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(stmt, i)); break;
        case SQLITE_NULL: row.emplace_back(std::monostate{}); break;
        default: {
          const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
          row.emplace_back(std::string(text ? text : "",
                                       static_cast<size_t>(sqlite3_column_bytes(stmt, i))));
        }
      }
    }
    result.denotation.rows.push_back(std::move(row));
  }
  if (rc == SQLITE_DONE) {
    result.kind = RawResult::Kind::kSuccess;
  } else if (deadline.expired) {
    result.kind = RawResult::Kind::kTimeout;
    result.denotation = {};
  } else {
    result.kind = RawResult::Kind::kError;
    result.message = rc == SQLITE_TOOBIG ? "result exceeds row cap" : sqlite3_errmsg(db);
    result.denotation = {};
  }
  sqlite3_finalize(stmt);
  sqlite3_close(db);
  return result;
}

std::string encode(const RawResult& r) {
  nlohmann::json j;
  if (r.kind == RawResult::Kind::kSuccess) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.denotation.rows) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& cell : row) out.push_back(cell_to_json(cell));
      rows.push_back(std::move(out));
    }
    j = {{"c", r.denotation.columns}, {"n", r.denotation.column_count}, {"r", std::move(rows)}};
  } else {
    j = {{"m", r.message}};
  }
  std::vector<std::uint8_t> cbor = nlohmann::json::to_cbor(j);
  std::string frame(1, static_cast<char>(r.kind));
  const std::uint64_t len = cbor.size();
  frame.append(reinterpret_cast<const char*>(&len), sizeof len);
  frame.append(cbor.begin(), cbor.end());
  return frame;
}

bool frame_complete(const std::string& buffer) {
  constexpr size_t kHeader = 1 + sizeof(std::uint64_t);
  if (buffer.size() < kHeader) return false;
  std::uint64_t len = 0;
  std::memcpy(&len, buffer.data() + 1, sizeof len);
  return buffer.size() >= kHeader + len;
}

// Returns false until `buffer` holds a whole frame.
bool decode(const std::string& buffer, RawResult& out) {
  constexpr size_t kHeader = 1 + sizeof(std::uint64_t);
  if (buffer.size() < kHeader) return false;
  std::uint64_t len = 0;
  std::memcpy(&len, buffer.data() + 1, sizeof len);
  if (buffer.size() < kHeader + len) return false;
  out.kind = static_cast<RawResult::Kind>(buffer[0]);
  const auto j = nlohmann::json::from_cbor(buffer.begin() + kHeader, buffer.begin() + kHeader + len);
  if (out.kind == RawResult::Kind::kSuccess) {
    out.denotation.columns = j.at("c").get<std::vector<std::string>>();
    out.denotation.column_count = j.at("n").get<std::size_t>();
    for (const auto& r : j.at("r")) {
      Row row;
      row.reserve(r.size());
      for (const auto& cell : r) row.push_back(cell_from_json(cell));
      out.denotation.rows.push_back(std::move(row));
    }
  } else {
    out.message = j.value("m", "");
  }
  return true;
}

void write_all(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return;
    }
    off += static_cast<size_t>(n);
  }
}

ExecutionOutcome finish(RawResult raw, const ExecRequest& request, double elapsed) {
  switch (raw.kind) {
    case RawResult::Kind::kSuccess: {
      if (elapsed > request.time_limit) return ExecTimeout{request.time_limit, elapsed};
      raw.denotation.ordered = has_top_level_order_by(request.sql);
      return ExecSuccess{std::move(raw.denotation), elapsed};
    }
    case RawResult::Kind::kTimeout:
      return ExecTimeout{request.time_limit, elapsed};
    case RawResult::Kind::kError:
      break;
  }
  return ExecError{raw.message};
}

struct Child {
  size_t index = 0;
  pid_t pid = -1;
  int fd = -1;
  Clock::time_point start;
  Clock::time_point deadline;
  std::string buffer;
  bool eof = false;
};

std::string exit_description(int status) {
  if (WIFSIGNALED(status)) {
    return std::string("worker crashed: ") + strsignal(WTERMSIG(status));
  }
  if (WIFEXITED(status)) return "worker exited with status " + std::to_string(WEXITSTATUS(status));
  return "worker failed";
}

}  // namespace

std::string describe(const ExecutionOutcome& o) {
  if (const auto* s = std::get_if<ExecSuccess>(&o)) {
    return "success (" + std::to_string(s->denotation.rows.size()) + " rows)";
  }
  if (const auto* e = std::get_if<ExecError>(&o)) return "error: " + e->message;
  return "timeout after " + std::to_string(std::get<ExecTimeout>(o).limit_seconds) + "s";
}

int default_worker_count() {
  if (const char* env = std::getenv("GSQL_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Executor::Executor(ExecutorOptions options) : options_(options) {
  configure_sqlite_once();
  workers_ = options_.workers > 0 ? options_.workers : default_worker_count();
}

void Executor::acquire(int n) const {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return busy_ + n <= workers_; });
  busy_ += n;
}

void Executor::release(int n) const {
  {
    std::lock_guard lock(mu_);
    busy_ -= n;
  }
  cv_.notify_all();
}

ExecutionOutcome Executor::execute(std::string_view sql, const DatabaseInstance& db,
                                   double time_limit) const {
  std::vector<ExecRequest> one{ExecRequest{std::string(sql), &db, time_limit}};
  return std::move(execute_batch(one).front());
}

std::vector<ExecutionOutcome> Executor::execute_batch(
    const std::vector<ExecRequest>& requests) const {
  if (requests.empty()) return {};
  if (options_.isolation == Isolation::kInProcess) {
    std::vector<ExecutionOutcome> out;
    out.reserve(requests.size());
    for (const auto& r : requests) out.push_back(run_in_process(r));
    return out;
  }
  return run_forked(requests);
}

ExecutionOutcome Executor::run_in_process(const ExecRequest& request) const {
  if (request.time_limit <= 0) return ExecError{"time limit must be positive"};
  const auto start = Clock::now();
  RawResult raw = run_sql(request.db->image(), request.sql, request.time_limit,
                          options_.max_rows, false);
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  return finish(std::move(raw), request, elapsed);
}

std::vector<ExecutionOutcome> Executor::run_forked(
    const std::vector<ExecRequest>& requests) const {
  std::vector<ExecutionOutcome> out(requests.size(), ExecError{"not run"});
  const int slots = std::min<int>(workers_, static_cast<int>(requests.size()));
  acquire(slots);

  std::vector<Child> running;
  size_t next = 0;

  auto spawn = [&](size_t index) {
    const ExecRequest& request = requests[index];
    if (request.time_limit <= 0 || !request.db) {
      out[index] = ExecError{"invalid request"};
      return;
    }
    int fds[2];
    if (::pipe(fds) != 0) {
      out[index] = ExecError{std::string("pipe failed: ") + std::strerror(errno)};
      return;
    }
    Child child;
    child.index = index;
    child.start = Clock::now();
    child.deadline = child.start + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(request.time_limit));
    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      out[index] = ExecError{std::string("fork failed: ") + std::strerror(errno)};
      return;
    }
    if (pid == 0) {
      ::close(fds[0]);
      RawResult raw = run_sql(request.db->image(), request.sql, request.time_limit,
                              options_.max_rows, options_.fault_injection);
      write_all(fds[1], encode(raw));
      ::close(fds[1]);
      ::_exit(0);
    }
    ::close(fds[1]);
    ::fcntl(fds[0], F_SETFL, ::fcntl(fds[0], F_GETFL) | O_NONBLOCK);
    child.pid = pid;
    child.fd = fds[0];
    running.push_back(std::move(child));
  };

  auto reap = [&](Child& child, bool killed) {
    if (killed) ::kill(child.pid, SIGKILL);
    int status = 0;
    while (::waitpid(child.pid, &status, 0) < 0 && errno == EINTR) {
    }
    ::close(child.fd);
    const double elapsed = std::chrono::duration<double>(Clock::now() - child.start).count();
    const ExecRequest& request = requests[child.index];
    if (killed) {
      out[child.index] = ExecTimeout{request.time_limit, elapsed};
      return;
    }
    RawResult raw;
    bool complete = false;
    try {
      complete = decode(child.buffer, raw);
    } catch (const std::exception& e) {
      out[child.index] = ExecError{std::string("corrupt worker reply: ") + e.what()};
      return;
    }
    if (!complete) {
      out[child.index] = ExecError{exit_description(status)};
      return;
    }
    out[child.index] = finish(std::move(raw), request, elapsed);
  };

  while (next < requests.size() || !running.empty()) {
    while (next < requests.size() && static_cast<int>(running.size()) < slots) spawn(next++);
    if (running.empty()) continue;

    const auto now = Clock::now();
    auto earliest = running.front().deadline;
    for (const auto& c : running) earliest = std::min(earliest, c.deadline);
    const auto wait_ms = std::max<long long>(
        0, std::chrono::duration_cast<std::chrono::milliseconds>(earliest - now).count() + 1);

    std::vector<pollfd> pfds;
    for (const auto& c : running) pfds.push_back({c.fd, POLLIN, 0});
    const int rc = ::poll(pfds.data(), pfds.size(), static_cast<int>(std::min<long long>(wait_ms, 1000)));
    if (rc < 0 && errno != EINTR) break;

    std::vector<Child> still;
    const auto after = Clock::now();
    for (size_t i = 0; i < running.size(); ++i) {
      Child& c = running[i];
      if (rc > 0 && (pfds[i].revents & (POLLIN | POLLHUP | POLLERR))) {
        char buf[65536];
        while (true) {
          const ssize_t n = ::read(c.fd, buf, sizeof buf);
          if (n > 0) {
            c.buffer.append(buf, static_cast<size_t>(n));
            continue;
          }
          if (n == 0) c.eof = true;
          break;
        }
      }
      if (c.eof || frame_complete(c.buffer)) {
        reap(c, false);
      } else if (after >= c.deadline) {
        reap(c, true);
      } else {
        still.push_back(std::move(c));
      }
    }
    running = std::move(still);
  }
  release(slots);
  return out;
}

}  // namespace gsql
