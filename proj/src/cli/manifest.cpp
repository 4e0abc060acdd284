#include "trendlab/cli.hpp"

#include "trendlab/error.hpp"

#include <fstream>

#ifndef TRENDLAB_VERSION
#define TRENDLAB_VERSION "0.0.0"
#endif
#ifndef TRENDLAB_GIT_STAMP
#define TRENDLAB_GIT_STAMP "unknown"
#endif

namespace trendlab::cli {

const char* version() { return TRENDLAB_VERSION; }
const char* git_stamp() { return TRENDLAB_GIT_STAMP; }

void write_manifest(const std::filesystem::path& dir, const Manifest& m) {
    const auto path = dir / "manifest.toml";
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "# trendlab " << version() << " (" << git_stamp() << ")\n";
    out << "# command: " << m.command << '\n';
    out << "# rerun: trendlab --config " << path.filename().string() << '\n';
    for (const auto& o : m.outputs) out << "# output: " << o << '\n';
    out << m.config;
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace trendlab::cli
