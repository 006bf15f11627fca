#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace stmt {

// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

// Lowercase hex SHA-256 of a file's contents. Throws LoadError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

// Whole-file read / write helpers shared by the persistence code.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace stmt
