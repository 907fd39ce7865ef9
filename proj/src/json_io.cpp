#include "hrc/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hrc/error.hpp"

namespace hrc {

namespace {

int line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

std::string ctx(std::string_view context, std::string_view key) {
    return std::string(context) + ": field '" + std::string(key) + "'";
}

}  // namespace

json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // e.byte is 1-based and points one past the offending character.
        const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
        throw ParseError(std::string(what) + " syntax error: " + e.what(), line_of(text, byte));
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

const json& require_field(const json& j, std::string_view key, std::string_view context) {
    if (!j.is_object()) throw ValidationError(std::string(context) + ": expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(ctx(context, key) + " is missing");
    return *it;
}

double require_number(const json& j, std::string_view key, std::string_view context) {
    const auto& v = require_field(j, key, context);
    if (!v.is_number()) throw ValidationError(ctx(context, key) + " must be a number");
    return v.get<double>();
}

std::string require_string(const json& j, std::string_view key, std::string_view context) {
    const auto& v = require_field(j, key, context);
    if (!v.is_string()) throw ValidationError(ctx(context, key) + " must be a string");
    return v.get<std::string>();
}

bool require_bool(const json& j, std::string_view key, std::string_view context) {
    const auto& v = require_field(j, key, context);
    if (!v.is_boolean()) throw ValidationError(ctx(context, key) + " must be a boolean");
    return v.get<bool>();
}

void check_header(const json& j, std::string_view format, int max_version) {
    const auto f = require_string(j, "format", format);
    if (f != format) {
        throw ValidationError("expected format '" + std::string(format) + "', got '" + f + "'");
    }
    const auto v = require_number(j, "version", format);
    if (v < 1 || v > max_version) {
        throw ValidationError(std::string(format) + ": unsupported version " + std::to_string(v));
    }
}

}  // namespace hrc
