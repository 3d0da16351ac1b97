#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace pfcp::toml
{

/// Subset of TOML: [table] headers, dotted keys, strings, integers, floats,
/// booleans and (nested, multi-line) arrays. No inline tables, dates or arrays of tables.
struct Value
{
  using Array = std::vector<Value>;
  std::variant<bool, std::int64_t, double, std::string, Array> data;

  Value() : data(false) {}
  Value(bool b) : data(b) {}
  Value(int i) : data(static_cast<std::int64_t>(i)) {}
  Value(std::int64_t i) : data(i) {}
  Value(double d) : data(d) {}
  Value(const char* s) : data(std::string(s)) {}
  Value(std::string s) : data(std::move(s)) {}
  Value(Array a) : data(std::move(a)) {}

  bool is_number() const { return std::holds_alternative<double>(data) || std::holds_alternative<std::int64_t>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_integer() const { return std::holds_alternative<std::int64_t>(data); }

  bool operator==(const Value& o) const { return data == o.data; }
};

/// Flattened document: full dotted key -> value.
using Document = std::map<std::string, Value>;

class SyntaxError : public std::runtime_error
{
public:
  SyntaxError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
  {
  }
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

Document parse(const std::string& text);

/// Root keys first, then one [table] per dotted prefix. Floats keep full precision.
std::string serialize(const Document& doc);

std::string format_value(const Value& v);

} // namespace pfcp::toml
