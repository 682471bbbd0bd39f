#pragma once

// Command-line front end: parse, ground, analyze, search, and write plan /
// stats files.  Kept out of main() so tests can drive it with argument
// vectors and capture the streams.

#include <iosfwd>
#include <string>
#include <vector>

namespace tap {

// argv excludes the program name.  Returns the process exit status:
// 0 = at least one plan found and written, 1 = no plan (search exhausted,
// budget hit, or goals unreachable), 2 = bad input (files, PDDL, flags).
int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err);

}  // namespace tap
