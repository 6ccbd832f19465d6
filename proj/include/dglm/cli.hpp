#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dglm {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,
    exit_numerical = 3,
    exit_io = 4,
};

/// Dense weight vector by internal id, one "feature_id value" line each.
void write_weights(const std::filesystem::path& path, const std::vector<double>& weights);
std::vector<double> read_weights(const std::filesystem::path& path);

/// Entry point for the dglm tool. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

} // namespace dglm
