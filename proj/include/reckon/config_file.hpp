#pragma once

#include "reckon/corpus.hpp"
#include "reckon/error.hpp"

#include <filesystem>
#include <map>
#include <sstream>
#include <string>

namespace reckon {

/// Flat `section.key = value` file. Blank lines and lines starting with '#'
/// or ';' are ignored; values may be wrapped in double quotes.
inline std::map<std::string, std::string> load_flat_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw Error("config file not found: '" + path.string() + "'");
    }
    std::istringstream in(detail::read_file(path));
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#' || t.front() == ';') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected 'key = value'", line_no);
        }
        auto key   = detail::trim(std::string_view(t).substr(0, eq));
        auto value = detail::trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) {
            throw ParseError("empty key", line_no);
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        out[key] = value;
    }
    return out;
}

}  // namespace reckon
