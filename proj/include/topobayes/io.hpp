#pragma once

#include <filesystem>
#include <string>

namespace topobayes::io {

/// Whole-file read; throws IoError naming the path.
std::string read_text(const std::filesystem::path& path);

/// Creates parent directories as needed; throws IoError naming the path.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

} // namespace topobayes::io
