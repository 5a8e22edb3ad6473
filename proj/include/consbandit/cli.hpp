#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace consbandit {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

/// Entry point behind the consbandit binary. args excludes the program name.
///   run           --config FILE | --preset NAME  --out DIR  [--set k=v ...]
///   sweep-alpha   ... [--grid a:b:step | v1,v2,...]
///   sweep-horizon ... [--grid ...]
///   report        --in DIR
///   presets       [--show NAME]
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace consbandit
