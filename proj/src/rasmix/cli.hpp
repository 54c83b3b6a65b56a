#pragma once

namespace rasmix {

// Exit codes: 0 success, 2 invalid configuration or usage, 3 divergence or
// non-convergence, 4 numerical failure, 1 unexpected error.
int run_cli(int argc, char** argv);

} // namespace rasmix
