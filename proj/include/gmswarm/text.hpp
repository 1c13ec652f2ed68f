#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text and file helpers shared by the CSV readers.
namespace gmswarm {

std::string_view trim(std::string_view s) noexcept;
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_lines(std::string_view s);
std::vector<std::string_view> split_whitespace(std::string_view s);
std::optional<double> parse_double(std::string_view s) noexcept;

/// Throws Error(Errc::io_error).
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace gmswarm
