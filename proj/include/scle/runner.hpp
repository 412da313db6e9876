#pragma once

#include <string>
#include <vector>

#include "scle/config.hpp"

namespace scle {

struct RunOutcome {
    std::string summary;                 // one line, no trailing newline
    std::vector<std::string> artifacts;  // files written, relative to the output directory
};

/// Executes cfg.command, writing artifacts and manifest.json into out_dir.
/// `threads` caps worker count and never changes results.
RunOutcome run_command(const RunConfig& cfg, const std::string& out_dir, int threads);

}  // namespace scle
