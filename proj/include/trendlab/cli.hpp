#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace trendlab::cli {

/// Entry point of the `trendlab` tool. Returns the process exit code:
/// 0 ok, 2 configuration error, 3 data error, 4 numerical failure.
/// Errors are reported on `err` as one line
///   error kind=<kind> exit=<code> message="<text>"
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct Manifest {
    std::string command;
    std::string config;  // resolved options, loadable with --config
    std::vector<std::string> outputs;
};

/// manifest.toml in `dir`: version and git stamp as comments, then the
/// resolved configuration and the artifact list.
void write_manifest(const std::filesystem::path& dir, const Manifest& m);

const char* version();
const char* git_stamp();

}  // namespace trendlab::cli
