#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pisfp {

// Exit codes: 0 ok, 1 invalid input, 2 numerical failure, 3 empty feasible region.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

} // namespace pisfp
