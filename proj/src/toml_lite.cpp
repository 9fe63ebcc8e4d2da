#include "ragaudit/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "ragaudit/errors.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit::toml {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& why) {
  throw ConfigInvalid("config line " + std::to_string(line) + ": " + why);
}

bool bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class Cursor {
 public:
  Cursor(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  bool at_end_or_comment() {
    skip_ws();
    return i_ >= s_.size() || s_[i_] == '#';
  }
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }

  Value value() {
    skip_ws();
    Value v;
    v.line = line_;
    char c = peek();
    if (c == '"') {
      v.kind = Value::Kind::String;
      v.str = basic_string();
    } else if (c == '\'') {
      v.kind = Value::Kind::String;
      ++i_;
      auto end = s_.find('\'', i_);
      if (end == std::string_view::npos) fail(line_, "unterminated string");
      v.str = std::string(s_.substr(i_, end - i_));
      i_ = end + 1;
    } else if (c == '[') {
      v.kind = Value::Kind::Array;
      ++i_;
      for (;;) {
        skip_ws();
        if (peek() == ']') {
          ++i_;
          break;
        }
        v.items.push_back(value());
        if (v.items.back().kind == Value::Kind::Array) fail(line_, "nested arrays are not supported");
        skip_ws();
        if (peek() == ',') {
          ++i_;
        } else if (peek() == ']') {
          ++i_;
          break;
        } else {
          fail(line_, "expected ',' or ']' in array");
        }
      }
    } else {
      std::size_t b = i_;
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != ']' && s_[i_] != '#' && s_[i_] != ' ' &&
             s_[i_] != '\t')
        ++i_;
      std::string tok(s_.substr(b, i_ - b));
      if (tok == "true" || tok == "false") {
        v.kind = Value::Kind::Bool;
        v.boolean = tok == "true";
      } else {
        std::string clean;
        for (char ch : tok)
          if (ch != '_') clean += ch;
        if (clean.empty()) fail(line_, "missing value");
        bool is_float = clean.find_first_of(".eE") != std::string::npos || clean == "inf" || clean == "nan";
        char* end = nullptr;
        double d = std::strtod(clean.c_str(), &end);
        if (end != clean.c_str() + clean.size()) fail(line_, "invalid value '" + tok + "'");
        v.kind = is_float ? Value::Kind::Float : Value::Kind::Integer;
        v.num = d;
      }
    }
    return v;
  }

  std::string key() {
    skip_ws();
    std::string k;
    if (peek() == '"') return basic_string();
    while (i_ < s_.size() && (bare_key_char(s_[i_]) || s_[i_] == '.')) k += s_[i_++];
    if (k.empty()) fail(line_, "expected a key");
    return k;
  }

  bool eat(char c) {
    skip_ws();
    if (peek() != c) return false;
    ++i_;
    return true;
  }

 private:
  std::string basic_string() {
    ++i_;  // opening quote
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c != '\\') {
        out += c;
        continue;
      }
      if (i_ >= s_.size()) break;
      char e = s_[i_++];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line_, std::string("unsupported escape \\") + e);
      }
    }
    if (i_ >= s_.size()) fail(line_, "unterminated string");
    ++i_;
    return out;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t i_ = 0;
};

}  // namespace

Table parse(std::string_view text) {
  Table out;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    Cursor c(line, line_no);
    if (c.at_end_or_comment()) continue;
    if (c.eat('[')) {
      section = c.key();
      if (!c.eat(']')) fail(line_no, "expected ']'");
      if (!c.at_end_or_comment()) fail(line_no, "trailing characters after section header");
      continue;
    }
    std::string k = c.key();
    if (!c.eat('=')) fail(line_no, "expected '='");
    Value v = c.value();
    if (!c.at_end_or_comment()) fail(line_no, "trailing characters after value");
    std::string full = section.empty() ? k : section + "." + k;
    if (!out.emplace(full, std::move(v)).second) fail(line_no, "duplicate key '" + full + "'");
  }
  return out;
}

}  // namespace ragaudit::toml
