#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace guardsim {

/// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents. Throws IoError if the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// Reads a whole file into memory. Throws IoError naming the path.
std::string read_file_bytes(const std::filesystem::path& path, const std::string& module);

/// Writes bytes to a file, replacing it. Throws IoError naming the path.
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes,
                      const std::string& module);

}  // namespace guardsim
