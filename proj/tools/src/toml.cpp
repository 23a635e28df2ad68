#include "granular/cli/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "granular/errors.hpp"

namespace granular::cli {
namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Document parse() {
    Document doc;
    std::string section;
    doc[section];
    while (!at_end()) {
      skip_blank();
      if (at_end()) break;
      if (peek() == '\n') {
        advance();
        continue;
      }
      if (peek() == '[') {
        advance();
        skip_spaces();
        section = key();
        skip_spaces();
        expect(']');
        if (doc.count(section) && section_seen_[section]) fail(fmt::format("duplicate section [{}]", section));
        section_seen_[section] = true;
        doc[section];
      } else {
        const int at = line_;
        std::string k = key();
        skip_spaces();
        expect('=');
        skip_spaces();
        Value v = value();
        v.line = at;
        auto& table = doc[section];
        if (table.count(k)) fail(fmt::format("duplicate key '{}'", k));
        table.emplace(std::move(k), std::move(v));
      }
      end_of_line();
    }
    if (!doc[""].size()) doc.erase("");
    return doc;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  void advance() {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(fmt::format("line {}: {}", line_, what));
  }
  void expect(char c) {
    if (peek() != c) fail(fmt::format("expected '{}'", c));
    advance();
  }
  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') advance();
    }
  }
  void skip_blank() {
    skip_spaces();
    skip_comment();
  }
  // Whitespace, comments and newlines, used inside arrays.
  void skip_all() {
    while (!at_end()) {
      skip_blank();
      if (peek() == '\n') {
        advance();
      } else {
        break;
      }
    }
  }
  void end_of_line() {
    skip_blank();
    if (at_end()) return;
    if (peek() != '\n') fail("unexpected trailing characters");
    advance();
  }

  std::string key() {
    std::string k;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
      k += peek();
      advance();
    }
    if (k.empty()) fail("expected a key");
    return k;
  }

  Value value() {
    const char c = peek();
    if (c == '"') return {string_value()};
    if (c == '[') return {array_value()};
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return {true};
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return {false};
    }
    return number_value();
  }

  std::string string_value() {
    expect('"');
    std::string s;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      char c = peek();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("unterminated string");
        const char e = peek();
        advance();
        switch (e) {
          case 'n': s += '\n'; break;
          case 't': s += '\t'; break;
          case '"': s += '"'; break;
          case '\\': s += '\\'; break;
          default: fail(fmt::format("unsupported escape '\\{}'", e));
        }
      } else {
        s += c;
      }
    }
    return s;
  }

  Value::Array array_value() {
    expect('[');
    Value::Array items;
    skip_all();
    while (peek() != ']') {
      const int at = line_;
      Value v = value();
      v.line = at;
      items.push_back(std::move(v));
      skip_all();
      if (peek() == ',') {
        advance();
        skip_all();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    advance();
    return items;
  }

  Value number_value() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                         peek() == '.' || peek() == '_')) {
      advance();
    }
    std::string token(text_.substr(start, pos_ - start));
    if (token.empty()) fail("expected a value");
    std::erase(token, '_');
    const char* first = token.data() + (token.front() == '+' ? 1 : 0);
    const char* last = token.data() + token.size();
    if (token == "inf" || token == "+inf" || token == "-inf" || token.find("nan") != std::string::npos) {
      fail("non-finite numbers are not accepted");
    }
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t i = 0;
      const auto [ptr, ec] = std::from_chars(first, last, i);
      if (ec == std::errc() && ptr == last) return {i};
    } else {
      double d = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, d);
      if (ec == std::errc() && ptr == last) return {d};
    }
    fail(fmt::format("cannot parse value '{}'", token));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, bool> section_seen_;
};

[[noreturn]] void type_error(std::string_view key, int line, std::string_view want) {
  throw ConfigError(fmt::format("line {}: '{}' must be {}", line, key, want));
}

}  // namespace

bool Value::is_number() const noexcept {
  return std::holds_alternative<std::int64_t>(data) || std::holds_alternative<double>(data);
}

double Value::as_double(std::string_view key) const {
  if (const auto* i = std::get_if<std::int64_t>(&data)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&data)) return *d;
  type_error(key, line, "a number");
}

std::int64_t Value::as_int(std::string_view key) const {
  if (const auto* i = std::get_if<std::int64_t>(&data)) return *i;
  type_error(key, line, "an integer");
}

bool Value::as_bool(std::string_view key) const {
  if (const auto* b = std::get_if<bool>(&data)) return *b;
  type_error(key, line, "true or false");
}

const std::string& Value::as_string(std::string_view key) const {
  if (const auto* s = std::get_if<std::string>(&data)) return *s;
  type_error(key, line, "a string");
}

const Value::Array& Value::as_array(std::string_view key) const {
  if (const auto* a = std::get_if<Array>(&data)) return *a;
  type_error(key, line, "an array");
}

Document parse_toml(std::string_view text) { return Parser(text).parse(); }

Document parse_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_toml(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace granular::cli
