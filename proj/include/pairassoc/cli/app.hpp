#pragma once

#include <ostream>
#include <string>
#include <string_view>

namespace pairassoc::cli {

inline constexpr std::string_view kToolName = "pairassoc";
inline constexpr std::string_view kVersion = "1.0.0";

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitComputation = 3;

/// Runs the command line `argv` (argv[0] is the program name). Console tables go
/// to `out`, warnings and errors to `err`. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Path of the manifest written next to a result file.
std::string manifest_path(const std::string& out_path);

/// `out_path` with `.tag` inserted before its extension, e.g. res.components.csv.
std::string sidecar_path(const std::string& out_path, std::string_view tag);

}  // namespace pairassoc::cli
