#ifndef QCLT_TOOLS_APP_HPP
#define QCLT_TOOLS_APP_HPP

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qclt::app {

inline constexpr const char *version = "1.0.0";

/// Bad config or spec; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> frequencies;
};

struct RunOptions {
  std::string command;
  std::filesystem::path config;
  std::filesystem::path out = "out";
  Overrides overrides;
  unsigned threads = 1;
  bool quiet = false;
};

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> outputs; ///< file names relative to the output directory
  std::vector<std::string> failures;
  std::string summary;              ///< human-readable text for the terminal
};

/// Loads the config, applies overrides, inlines a referenced spec file and
/// returns the self-contained document that is stored in the manifest.
YAML::Node resolve_config(const std::filesystem::path &config, const Overrides &overrides);

/// Runs one command on a resolved config. Writes outputs and failures.txt
/// (when anything failed) into out; does not write a manifest.
RunResult execute(const std::string &command, const YAML::Node &resolved,
                  const std::filesystem::path &out);

/// resolve_config + execute + manifest.yaml.
RunResult run(const RunOptions &options);

/// Re-executes the run recorded in a manifest into out and compares the
/// digest of every listed output. Mismatches are reported as failures.
RunResult replay(const std::filesystem::path &manifest, const std::filesystem::path &out,
                 unsigned threads = 1);

/// FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path &path);

int main(int argc, char **argv);

} // namespace qclt::app

#endif // QCLT_TOOLS_APP_HPP
