#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace granular::cli {

/// A value of the config subset: booleans, integers, floats, basic strings
/// and (nested) arrays. Inline tables, dates and multi-line strings are not
/// supported.
struct Value {
  using Array = std::vector<Value>;
  std::variant<bool, std::int64_t, double, std::string, Array> data;
  int line = 0;

  bool is_number() const noexcept;
  double as_double(std::string_view key) const;
  std::int64_t as_int(std::string_view key) const;
  bool as_bool(std::string_view key) const;
  const std::string& as_string(std::string_view key) const;
  const Array& as_array(std::string_view key) const;
};

using Table = std::map<std::string, Value>;
/// Section name -> keys. Keys before the first header live under "".
using Document = std::map<std::string, Table>;

/// Throws ConfigError with a line number on malformed input.
Document parse_toml(std::string_view text);
Document parse_toml_file(const std::filesystem::path& path);

}  // namespace granular::cli
