#pragma once

#include <iosfwd>

namespace epd::pipeline {

// Entry point of the epdkit command-line tool. Returns 0 on success, 1 when
// a command fails (after printing "error: <kind>: <message>" to `err`) and
// 2 for usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace epd::pipeline
