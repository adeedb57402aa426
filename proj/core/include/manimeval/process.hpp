#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace manimeval::process {

struct Options {
  std::filesystem::path cwd;  // empty: inherit
  std::chrono::milliseconds timeout{0};  // zero: no limit
  std::vector<std::pair<std::string, std::string>> extra_env;
  /// Send stderr into the stdout stream, preserving interleaving.
  bool merge_stderr = false;
};

struct Result {
  int exit_code = -1;    // valid when the child exited normally
  int term_signal = 0;   // non-zero when killed by a signal
  bool timed_out = false;
  std::string out;
  std::string err;       // empty when merge_stderr is set
  std::chrono::milliseconds elapsed{0};

  [[nodiscard]] bool ok() const { return !timed_out && term_signal == 0 && exit_code == 0; }
};

/// Runs argv[0] (searched on PATH) in its own process group and captures its
/// output. On timeout the whole group is killed with SIGKILL. Throws
/// EnvironmentError when the executable cannot be started.
Result run(const std::vector<std::string>& argv, const Options& options = {});

/// PATH lookup; absolute or relative paths containing '/' are checked as-is.
std::optional<std::filesystem::path> find_executable(std::string_view name);

/// Last `n` lines of `text`, without a trailing newline.
std::string tail_lines(std::string_view text, std::size_t n);

}  // namespace manimeval::process
