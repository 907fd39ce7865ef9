#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace hrc {

using json = nlohmann::json;

// Parses JSON text, converting syntax errors into ParseError with a line number.
json parse_json(std::string_view text, std::string_view what);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Field accessors that raise ValidationError naming the missing/mistyped key.
double require_number(const json& j, std::string_view key, std::string_view context);
std::string require_string(const json& j, std::string_view key, std::string_view context);
bool require_bool(const json& j, std::string_view key, std::string_view context);
const json& require_field(const json& j, std::string_view key, std::string_view context);

// Checks a {"format": ..., "version": ...} header.
void check_header(const json& j, std::string_view format, int max_version);

}  // namespace hrc
