#ifndef ALTO_TOOLS_COMMANDS_HPP_
#define ALTO_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "alto/alto_tensor.hpp"
#include "alto/common.hpp"

namespace alto::cli {

enum ExitCode : int {
  kSuccess = 0,
  kVerificationFailed = 1,
  kUsageError = 2,
  kIoError = 3,
};

// Bad flag values discovered after parsing (mode out of range, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Environment variable consulted when --workers is absent.
inline constexpr const char* kWorkersEnv = "ALTO_WORKERS";

// Maximum oracle error accepted by `check` and `mttkrp --check`.
inline constexpr double kCheckTolerance = 1e-10;

struct CommandResult {
  nlohmann::json report;
  int exit_code = kSuccess;
};

// --workers, then $ALTO_WORKERS, then the hardware thread count.
unsigned resolve_workers(std::optional<unsigned> flag);

// Reads a .alto container or .tns text file; the format is sniffed from the
// leading magic bytes. `dims` only applies to text input.
AnyAltoTensor load_tensor(const std::string& path,
                          const std::optional<std::vector<std::uint64_t>>& dims = {});

struct ConvertArgs {
  std::string input;
  std::string output;
  std::optional<std::vector<std::uint64_t>> dims;
};
CommandResult cmd_convert(const ConvertArgs& args);

struct StatsArgs {
  std::string input;
  std::optional<std::vector<std::uint64_t>> dims;
  unsigned word_bits = 8;
};
CommandResult cmd_stats(const StatsArgs& args);

// JSON for tensor statistics; shared by `stats` and tests.
nlohmann::json stats_report(std::span<const std::uint64_t> dims, std::uint64_t nnz,
                            unsigned word_bits);

struct MttkrpArgs {
  std::string input;
  std::optional<std::vector<std::uint64_t>> dims;
  std::size_t mode = 1;  // one-based
  std::size_t rank = 16;
  std::size_t iters = 10;
  std::size_t warmup = 1;
  std::optional<unsigned> workers;
  std::size_t partitions = 0;
  std::string strategy = "auto";
  std::uint64_t seed = 0;
  bool check = false;
};
CommandResult cmd_mttkrp(const MttkrpArgs& args);
CommandResult cmd_mttkrp(const AnyAltoTensor& tensor, const MttkrpArgs& args);

struct CpdArgs {
  std::string input;
  std::optional<std::vector<std::uint64_t>> dims;
  std::size_t rank = 16;
  std::size_t max_iters = 100;
  double tol = 1e-5;
  std::uint64_t seed = 0;
  std::optional<std::string> out_dir;
  std::optional<unsigned> workers;
  std::size_t partitions = 0;
  std::string backend = "parallel";
  std::string strategy = "auto";
};
CommandResult cmd_cpd(const CpdArgs& args);

struct CheckArgs {
  std::string input;
  std::optional<std::vector<std::uint64_t>> dims;
  std::optional<std::size_t> mode;  // one-based; all modes when unset
  std::size_t rank = 16;
  std::uint64_t seed = 0;
  std::optional<unsigned> workers;
  std::size_t partitions = 0;
  std::string strategy = "auto";
};
CommandResult cmd_check(const CheckArgs& args);

struct GenerateArgs {
  std::vector<std::uint64_t> dims;
  std::uint64_t nnz = 0;
  std::uint64_t seed = 0;
  std::string output;
};
CommandResult cmd_generate(const GenerateArgs& args);

// Maps an exception from a command onto {exit code, error JSON}.
CommandResult error_result(const std::exception& e);

}  // namespace alto::cli

#endif  // ALTO_TOOLS_COMMANDS_HPP_
