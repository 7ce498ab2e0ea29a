#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace gravity::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsageError = 2;

// Runs one subcommand. `args` excludes the program name. Returns the exit
// status: 0 on success, 1 on data or estimation errors, 2 on usage errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Writes `content` to a temporary file beside `path`, then renames it over
// `path`. The target is never left half-written.
void write_atomic(const std::filesystem::path& path, std::string_view content);

// Closest candidate by edit distance, or "" if none is close.
std::string suggest(std::string_view unknown, const std::vector<std::string>& candidates);

}  // namespace gravity::cli
