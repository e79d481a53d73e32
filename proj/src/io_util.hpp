#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace negadapt::detail {

/// Throws FileNotFound when missing, IoError when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string> split_lines(std::string_view text);
std::string_view trim(std::string_view s);

/// Shortest decimal that reads back as `x`.
std::string format_double(double x);

}  // namespace negadapt::detail
