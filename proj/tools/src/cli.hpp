#pragma once

#include <iosfwd>

namespace t2ia::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;  // bad flags, config or input
inline constexpr int kExitOracle = 3;

inline constexpr const char* kTokenEnvVar = "T2IA_ADAPTER_TOKEN";

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace t2ia::cli
