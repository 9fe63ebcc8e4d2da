#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ragaudit::toml {

/// One scalar or a flat array of scalars.
struct Value {
  enum class Kind { String, Integer, Float, Bool, Array };
  Kind kind = Kind::String;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<Value> items;
  std::size_t line = 0;

  bool is_number() const { return kind == Kind::Integer || kind == Kind::Float; }
};

/// Keys are flattened to "section.key" ("key" for the root table).
using Table = std::map<std::string, Value>;

/// Subset: [section] / [a.b] headers, key = value with basic strings,
/// literal strings, integers, floats, booleans and single-line arrays, `#`
/// comments. Throws ConfigInvalid naming the offending line.
Table parse(std::string_view text);

}  // namespace ragaudit::toml
