#include "brakke/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace brakke {

namespace {

using nlohmann::json;

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = header(root);
      } else {
        key_value(*table);
      }
      end_of_line();
    }
    return root;
  }

 private:
  std::string_view s_;
  std::size_t i_ = 0;
  int line_ = 1;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + what);
  }
  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[i_]; }
  char get() {
    const char c = s_[i_++];
    if (c == '\n') ++line_;
    return c;
  }
  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++i_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++i_;
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        get();
      } else {
        break;
      }
    }
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_all() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        get();
      } else {
        return;
      }
    }
  }
  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') get();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected text after value");
    get();
  }

  static bool bare_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

  std::string key_part() {
    skip_spaces();
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    std::string k;
    while (!eof() && bare_char(peek())) k += get();
    if (k.empty()) fail("expected a key");
    return k;
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{key_part()};
    skip_spaces();
    while (peek() == '.') {
      get();
      parts.push_back(key_part());
      skip_spaces();
    }
    return parts;
  }

  // Walks to the table named by parts[0..n-1], creating it; the last element
  // of an array of tables is entered.
  json* descend(json& root, const std::vector<std::string>& parts, std::size_t n) {
    json* t = &root;
    for (std::size_t k = 0; k < n; ++k) {
      json& next = (*t)[parts[k]];
      if (next.is_null()) next = json::object();
      if (next.is_array() && !next.empty() && next.back().is_object()) {
        t = &next.back();
      } else if (next.is_object()) {
        t = &next;
      } else {
        fail("key '" + parts[k] + "' is not a table");
      }
    }
    return t;
  }

  json* header(json& root) {
    get();
    const bool array = peek() == '[';
    if (array) get();
    const auto parts = dotted_key();
    for (int k = array ? 2 : 1; k > 0; --k) {
      if (peek() != ']') fail("unterminated table header");
      get();
    }
    json* parent = descend(root, parts, parts.size() - 1);
    json& slot = (*parent)[parts.back()];
    if (array) {
      if (slot.is_null()) slot = json::array();
      if (!slot.is_array()) fail("'" + parts.back() + "' is not an array of tables");
      slot.push_back(json::object());
      return &slot.back();
    }
    if (slot.is_null()) slot = json::object();
    if (!slot.is_object()) fail("'" + parts.back() + "' is already a value");
    return &slot;
  }

  void key_value(json& table) {
    const auto parts = dotted_key();
    skip_spaces();
    if (get() != '=') fail("expected '='");
    skip_spaces();
    json* t = descend(table, parts, parts.size() - 1);
    if (t->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
    (*t)[parts.back()] = value();
  }

  std::string basic_string() {
    get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = get();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string literal_string() {
    get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '\'') return out;
      out += c;
    }
  }

  json number_or_word() {
    std::string tok;
    while (!eof() && (bare_char(peek()) || peek() == '.' || peek() == '+')) tok += get();
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string clean;
    for (char c : tok)
      if (c != '_') clean += c;
    std::string_view body = clean;
    bool neg = false;
    if (!body.empty() && (body[0] == '+' || body[0] == '-')) {
      neg = body[0] == '-';
      body.remove_prefix(1);
    }
    if (body == "inf") return neg ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    const char* b = clean.data() + (clean[0] == '+' ? 1 : 0);
    const char* e = clean.data() + clean.size();
    if (!is_float) {
      std::int64_t v = 0;
      const auto r = std::from_chars(b, e, v);
      if (r.ec == std::errc() && r.ptr == e) return v;
    } else {
      double v = 0.0;
      const auto r = std::from_chars(b, e, v);
      if (r.ec == std::errc() && r.ptr == e) return v;
    }
    fail("bad value '" + tok + "'");
  }

  json value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') {
      get();
      json arr = json::array();
      while (true) {
        skip_all();
        if (peek() == ']') {
          get();
          return arr;
        }
        arr.push_back(value());
        skip_all();
        if (peek() == ',') {
          get();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
    }
    if (c == '{') {
      get();
      json obj = json::object();
      skip_spaces();
      if (peek() == '}') {
        get();
        return obj;
      }
      while (true) {
        key_value(obj);
        skip_spaces();
        const char d = get();
        if (d == '}') return obj;
        if (d != ',') fail("expected ',' or '}' in inline table");
      }
    }
    if (eof() || c == '\n' || c == '#') fail("missing value");
    return number_or_word();
  }
};

}  // namespace

nlohmann::json parse_toml(std::string_view text) { return Parser(text).parse(); }

nlohmann::json load_toml(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_toml(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace brakke
