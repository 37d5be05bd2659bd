#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace ohca::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 2,
    kPreconditionError = 3,
    kNotCertified = 4,
};

/// Parses argv and dispatches to a subcommand. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Git blob hash: SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_hash(std::string_view content);

/// Writes through a temporary sibling file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace ohca::cli
