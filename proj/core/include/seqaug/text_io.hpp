#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace seqaug {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

/// Parses `key = value` lines. Blank lines and lines starting with '#' are
/// skipped. Throws InvalidArgument on a line without '='.
KeyValues parse_key_values(std::string_view text);

/// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);
/// Strict parse of the whole field; throws InvalidArgument.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);
bool parse_bool(std::string_view text);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: creates parent dirs first.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace seqaug
