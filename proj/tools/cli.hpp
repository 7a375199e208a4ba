#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace evcharge::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode { kOk = 0, kUsageError = 1, kDataError = 2, kInternalError = 3 };

// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace evcharge::cli
