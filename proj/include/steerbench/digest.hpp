#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace steerbench {

/// SHA-256 of the given bytes as a lowercase hex string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents.
std::string sha256_file_hex(const std::filesystem::path& path);

} // namespace steerbench
