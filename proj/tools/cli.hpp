#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace negadapt::cli {

enum ExitCode : int {
    kOk = 0,
    kIoFailure = 2,
    kProviderFailure = 3,
    kDataFailure = 4,
    kInternalFailure = 5,
};

/// Settings shared by the subcommands. Resolved from flags, then
/// NEGADAPT_* environment variables, then the config file, then defaults.
struct RunConfig {
    std::string endpoint;
    std::string model;
    std::filesystem::path cache_dir = "negadapt-cache";
    std::size_t batch_size = 64;
    std::size_t max_in_flight = 4;
    std::optional<std::string> instruction_prefix;
    std::uint64_t seed = 0;
    std::vector<double> grid;
    std::optional<std::filesystem::path> output_dir;
    long retry_base_ms = 1000;
};

/// Reads NEGADAPT_* variables; injectable for tests.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// Flat "key = value" file. Credentials are refused here by design.
/// Throws negadapt::Error (InvalidArgument) on unknown keys or bad values.
void apply_config_text(RunConfig& config, const std::string& text);

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env());

}  // namespace negadapt::cli
