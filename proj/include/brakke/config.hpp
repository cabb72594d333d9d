#pragma once

// Reader for the TOML subset used by experiment configs: comments, [table]
// and [[array.of.tables]] headers, dotted and quoted keys, basic and literal
// strings, integers, floats (including inf and nan), booleans, arrays (which
// may span lines) and inline tables. Dates and multi-line strings are not
// supported.

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace brakke {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ConfigError with the line number on malformed input or a key defined twice.
nlohmann::json parse_toml(std::string_view text);
nlohmann::json load_toml(const std::filesystem::path& path);

}  // namespace brakke
