#pragma once

#include <ostream>
#include <string>

namespace adalign {

// Runs one named property suite (gradcheck | cf | decomposition | mc)
// with fixed seeds, printing one line per check including its tolerance.
// Returns true when every check passes. Unknown names raise ConfigError.
bool run_verify_suite(const std::string& name, std::ostream& out);

}  // namespace adalign
