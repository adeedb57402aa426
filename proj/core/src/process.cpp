#include "manimeval/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "manimeval/error.hpp"

extern char** environ;

namespace manimeval::process {
namespace {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Fd& operator=(Fd&& other) noexcept {
    reset();
    fd_ = std::exchange(other.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }

  [[nodiscard]] int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

std::pair<Fd, Fd> make_pipe() {
  std::array<int, 2> fds{};
  if (::pipe2(fds.data(), O_CLOEXEC) != 0) {
    throw EnvironmentError(std::string("pipe: ") + std::strerror(errno));
  }
  return {Fd(fds[0]), Fd(fds[1])};
}

std::vector<std::string> build_env(const Options& options) {
  std::vector<std::string> env;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    bool overridden = false;
    for (const auto& [key, value] : options.extra_env) {
      if (entry.size() > key.size() && entry.starts_with(key) && entry[key.size()] == '=') {
        overridden = true;
        break;
      }
    }
    if (!overridden) env.emplace_back(entry);
  }
  for (const auto& [key, value] : options.extra_env) env.push_back(key + "=" + value);
  return env;
}

std::vector<char*> c_strings(std::vector<std::string>& strings) {
  std::vector<char*> out;
  out.reserve(strings.size() + 1);
  for (auto& s : strings) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

}  // namespace

std::optional<std::filesystem::path> find_executable(std::string_view name) {
  namespace fs = std::filesystem;
  if (name.empty()) return std::nullopt;
  auto runnable = [](const fs::path& p) {
    std::error_code ec;
    return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
  };
  if (name.find('/') != std::string_view::npos) {
    fs::path p(name);
    return runnable(p) ? std::optional(p) : std::nullopt;
  }
  const char* path_env = std::getenv("PATH");
  std::string_view path = path_env ? path_env : "/usr/local/bin:/usr/bin:/bin";
  while (true) {
    auto colon = path.find(':');
    auto dir = path.substr(0, colon);
    fs::path candidate = fs::path(dir.empty() ? "." : dir) / name;
    if (runnable(candidate)) return candidate;
    if (colon == std::string_view::npos) break;
    path.remove_prefix(colon + 1);
  }
  return std::nullopt;
}

Result run(const std::vector<std::string>& argv, const Options& options) {
  if (argv.empty()) throw ContractViolation("process::run: empty argv");
  auto exe = find_executable(argv[0]);
  if (!exe) throw EnvironmentError("executable not found: " + argv[0]);

  // Everything the child touches is prepared before fork.
  std::vector<std::string> args = argv;
  args[0] = exe->string();
  auto argv_c = c_strings(args);
  auto env = build_env(options);
  auto env_c = c_strings(env);
  std::string cwd = options.cwd.string();

  auto [out_r, out_w] = make_pipe();
  Fd err_r, err_w;
  if (!options.merge_stderr) std::tie(err_r, err_w) = make_pipe();
  auto [exec_r, exec_w] = make_pipe();

  const auto start = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) throw EnvironmentError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::dup2(out_w.get(), STDOUT_FILENO);
    ::dup2(options.merge_stderr ? out_w.get() : err_w.get(), STDERR_FILENO);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
      int e = errno;
      (void)!::write(exec_w.get(), &e, sizeof e);
      ::_exit(127);
    }
    ::execve(argv_c[0], argv_c.data(), env_c.data());
    int e = errno;
    (void)!::write(exec_w.get(), &e, sizeof e);
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // also done in the child; whichever runs first wins
  out_w.reset();
  err_w.reset();
  exec_w.reset();

  int exec_errno = 0;
  ssize_t got;
  do {
    got = ::read(exec_r.get(), &exec_errno, sizeof exec_errno);
  } while (got < 0 && errno == EINTR);
  if (got == static_cast<ssize_t>(sizeof exec_errno)) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    throw EnvironmentError("cannot start " + args[0] + ": " + std::strerror(exec_errno));
  }

  Result result;
  std::array<pollfd, 2> fds{};
  fds[0] = {out_r.get(), POLLIN, 0};
  fds[1] = {err_r.get(), POLLIN, 0};
  std::array<std::string*, 2> sinks{&result.out, &result.err};
  std::array<char, 65536> buf{};
  int open_streams = options.merge_stderr ? 1 : 2;
  if (options.merge_stderr) fds[1].fd = -1;

  while (open_streams > 0) {
    int wait_ms = -1;
    if (options.timeout.count() > 0) {
      auto left = options.timeout - std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::steady_clock::now() - start);
      if (left.count() <= 0) {
        result.timed_out = true;
        break;
      }
      wait_ms = static_cast<int>(left.count());
    }
    int ready = ::poll(fds.data(), fds.size(), wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (ready == 0) continue;  // loop re-checks the deadline
    for (std::size_t k = 0; k < fds.size(); ++k) {
      if (fds[k].fd < 0 || fds[k].revents == 0) continue;
      ssize_t n = ::read(fds[k].fd, buf.data(), buf.size());
      if (n > 0) {
        sinks[k]->append(buf.data(), static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        fds[k].fd = -1;
        --open_streams;
      }
    }
  }
  int status = 0;
  bool reaped = false;
  if (!result.timed_out && options.timeout.count() > 0) {
    // Streams closed but the child may still be running.
    while (!reaped && !result.timed_out) {
      if (::waitpid(pid, &status, WNOHANG) == pid) {
        reaped = true;
      } else if (std::chrono::steady_clock::now() - start >= options.timeout) {
        result.timed_out = true;
      } else {
        ::usleep(5000);
      }
    }
  }
  if (result.timed_out) ::kill(-pid, SIGKILL);
  while (!reaped && ::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  // Stragglers (e.g. an encoder spawned by the child) go with the group.
  ::kill(-pid, SIGKILL);
  result.elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  if (WIFSIGNALED(status)) result.term_signal = WTERMSIG(status);
  return result;
}

std::string tail_lines(std::string_view text, std::size_t n) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.remove_suffix(1);
  if (n == 0 || text.empty()) return {};
  std::size_t pos = text.size();
  std::size_t seen = 0;
  while (pos > 0) {
    auto nl = text.rfind('\n', pos - 1);
    if (nl == std::string_view::npos) return std::string(text);
    if (++seen == n) return std::string(text.substr(nl + 1));
    pos = nl;
  }
  return std::string(text);
}

}  // namespace manimeval::process
