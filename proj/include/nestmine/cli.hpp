#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nestmine/error.hpp"

namespace nestmine {

/// 2 query or usage error, 3 data error, 4 engine error.
int exit_code(Errc code);

/// Command line without the program name: run, explain, trace, repl or serve.
int run_cli(const std::vector<std::string> &args, std::istream &in, std::ostream &out, std::ostream &err);

} // namespace nestmine
