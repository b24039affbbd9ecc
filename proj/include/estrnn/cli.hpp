#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "estrnn/config.hpp"
#include "estrnn/synth_config.hpp"
#include "estrnn/train_config.hpp"

namespace estrnn::cli {

// One parsed command-line invocation. The thin binary in tools/ fills this
// from argv; tests drive run() directly.
struct Invocation {
    std::string subcommand;  // train | deblur | eval | synthesize | profile | sweep
    std::filesystem::path config_path;      // optional JSON config file
    std::vector<std::string> overrides;     // dotted-key=value, applied after the file
    std::filesystem::path output;
    std::filesystem::path input;
    std::filesystem::path checkpoint;       // model (deblur/eval) or resume (train)
    std::vector<std::filesystem::path> checkpoints;  // profile rows
    std::optional<std::uint64_t> seed;
    std::vector<std::string> archs;         // profile shorthand, e.g. B9C80
    std::string resolution = "1280x720";    // WxH
    std::string split = "test";
    std::string boundary = "valid";         // valid | replicate
    bool benchmark = false;
    int bench_runs = 20;
    std::string toy;                        // synthesize: SEQxFRAMESxHxW
    std::string sweep_target;               // sweep: subcommand to expand
};

struct ResolvedConfig {
    ModelConfig model;
    TrainConfig train;
    SynthesisConfig synthesis;
};

// File + overrides -> validated configs. Precedence: recipe defaults, then
// file values, then overrides; the final train.recipe is resolved first.
ResolvedConfig parse_config(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides);

// Executes the invocation. Returns the process exit code: 0 success, 2 bad
// config (offending key named), 3 missing files, 1 other runtime failures.
// Errors are reported as a single "error: <category>: <message>" line.
int run(const Invocation& inv);

}  // namespace estrnn::cli
