#pragma once

#include "cpdp/eval.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cpdp::cli {

struct DatasetRef {
    std::filesystem::path path;
    std::optional<std::string> label_column;
};

/// Everything one `train` or `sweep` invocation needs. Relative dataset and
/// output paths in the file are resolved against the file's directory.
struct RunConfig {
    DatasetRef source;
    DatasetRef target;
    PipelineConfig pipeline;
    std::optional<std::filesystem::path> output_dir;
};

/// Throws Error("config", ...) on unknown keys, wrong types or a missing seed.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Comma-separated epoch counts, e.g. "25,50,75,100". Throws Error("usage", ...)
/// when empty or malformed.
std::vector<std::size_t> parse_epoch_list(const std::string& text);

/// Runs one command line (args[0] is the program name). Returns the exit
/// status: 0 on success, 2 for usage errors, 1 for everything else. Failures
/// print a single `error: <category>: <detail>` line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cpdp::cli
