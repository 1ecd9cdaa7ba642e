#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wavesrc::cli {

// Exit codes: 0 success, 2 invalid input or arguments, 1 internal failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

// Directory searched for bare scenario names: --scenario-dir, then
// $WAVESRC_SCENARIO_DIR, then the bundled corpus.
std::string default_scenario_dir();

}  // namespace wavesrc::cli
