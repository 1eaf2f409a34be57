#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfield/verify.hpp"

namespace qfield::cli {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExitCode : int { Success = 0, CheckFailure = 1, Usage = 2 };

// Relative --out paths resolve against this directory when it is set.
inline constexpr const char* kOutputDirEnv = "QFIELD_OUTPUT_DIR";

struct CliConfig {
  std::string subcommand;
  std::optional<double> rho;
  std::optional<double> R;
  std::optional<double> q;
  std::optional<double> x;
  std::optional<double> y;
  std::vector<double> xs;  // poly: explicit evaluation points
  std::string method = "product";
  std::string normalization = "monic";
  double a = 0.8;
  std::size_t steps = 0;  // 0: subcommand default
  std::size_t reps = 64;
  std::size_t grid = 0;   // 0: subcommand default
  std::size_t n_max = 0;  // 0: subcommand default
  std::size_t k_max = kDefaultMaxLag;
  std::uint64_t seed = kDefaultSeed;
  std::string out;        // empty: stdout
  std::string format;     // empty: subcommand default
};

// Throws UsageError on bad flags; --help prints to `out` and yields nullopt.
std::optional<CliConfig> parse(int argc, const char* const* argv, std::ostream& out);

// Full text the subcommand emits plus its exit code.
struct Rendered {
  std::string text;
  ExitCode code = ExitCode::Success;
};
Rendered render(const CliConfig& config);

// render() and write, atomically (temp file + rename) when --out is given.
// Domain errors are reported on `err` with exit code 2.
int run(const CliConfig& config, std::ostream& out, std::ostream& err);

// parse() + run().
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Where --out lands after applying QFIELD_OUTPUT_DIR.
std::string resolve_output_path(const std::string& out);

}  // namespace qfield::cli
