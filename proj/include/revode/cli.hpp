// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace revode {

/// Exit codes: 0 success, 1 study failure, 2 configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace revode
