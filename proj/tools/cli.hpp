#pragma once

#include <iosfwd>

namespace ncboltz::cli
{
// Exit codes: 0 success, 1 a failed check or run, 2 usage or configuration error.
int run_cli(int argc, char const *const *argv, std::ostream &out, std::ostream &err);

} // namespace ncboltz::cli
