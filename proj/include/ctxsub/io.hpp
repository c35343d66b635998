#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ctxsub {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Calls `fn(record, line_number)` for each non-blank line of a line-delimited JSON file.
/// Line numbers are 1-based. Unparseable lines raise ParseError naming the line.
void for_each_json_line(const std::string& path,
                        const std::function<void(const json&, std::size_t)>& fn);

std::vector<std::string> read_lines(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);
bool file_exists(const std::string& path);

std::vector<std::string> split_tokens(std::string_view line);

/// Field accessors that turn type errors into ParseError with the line number.
std::string require_string(const json& j, const char* field, const std::string& src, std::size_t line);
std::optional<std::string> optional_string(const json& j, const char* field, const std::string& src,
                                           std::size_t line);

}  // namespace ctxsub
