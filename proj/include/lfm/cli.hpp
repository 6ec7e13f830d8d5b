#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lfm::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDataError = 3,
  kVerificationFailed = 4,
};

struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::string> arm;
  bool force = false;
};

int cmd_synth(const Options& options, std::ostream& log);
int cmd_make_lt(const Options& options, std::ostream& log);
int cmd_analyze(const Options& options, std::ostream& log);
int cmd_train(const Options& options, std::ostream& log);
int cmd_eval(const Options& options, std::ostream& log);
int cmd_verify(const Options& options, std::ostream& log);
int cmd_sweep(const Options& options, std::ostream& log);

/// Parses argv, dispatches, and maps errors to exit codes (diagnostics on `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lfm::cli
