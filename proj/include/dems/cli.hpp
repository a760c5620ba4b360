#pragma once

#include <iosfwd>

namespace dems {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes of dispatch.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one dems_lab subcommand. Human-readable text goes to `out`,
/// diagnostics and usage to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace dems
