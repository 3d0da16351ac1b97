#include "pfcp/toml.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <cstdio>
#include <set>
#include <sstream>

namespace pfcp::toml
{

namespace
{

class Reader
{
public:
  explicit Reader(const std::string& text) : s_(text) {}

  Document run()
  {
    Document doc;
    std::string prefix;
    for (;;)
    {
      skip_blank_lines();
      if (eof())
        break;
      if (peek() == '[')
      {
        ++pos_;
        if (peek() == '[')
          fail("arrays of tables are not supported");
        skip_spaces();
        prefix = read_key();
        skip_spaces();
        expect(']');
        if (!tables_.insert(prefix).second)
          fail("table [" + prefix + "] defined twice");
        end_of_line();
        continue;
      }
      std::string key = read_key();
      if (!prefix.empty())
        key = prefix + "." + key;
      skip_spaces();
      expect('=');
      skip_spaces();
      Value v = read_value();
      if (doc.count(key))
        fail("duplicate key '" + key + "'");
      doc.emplace(key, std::move(v));
      end_of_line();
    }
    return doc;
  }

private:
  const std::string& s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::set<std::string> tables_;

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(line_, what); }

  void expect(char c)
  {
    if (peek() != c)
      fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_spaces()
  {
    while (peek() == ' ' || peek() == '\t')
      ++pos_;
  }

  void skip_comment()
  {
    if (peek() == '#')
      while (!eof() && peek() != '\n')
        ++pos_;
  }

  // Whitespace, newlines and comments.
  void skip_blank_lines()
  {
    for (;;)
    {
      skip_spaces();
      skip_comment();
      if (peek() == '\r')
        ++pos_;
      if (peek() != '\n')
        return;
      ++pos_;
      ++line_;
    }
  }

  void end_of_line()
  {
    skip_spaces();
    skip_comment();
    if (peek() == '\r')
      ++pos_;
    if (eof())
      return;
    if (peek() != '\n')
      fail("unexpected trailing characters");
    ++pos_;
    ++line_;
  }

  static bool bare(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

  std::string read_key()
  {
    std::string key;
    for (;;)
    {
      skip_spaces();
      if (peek() == '"')
        key += read_string();
      else
      {
        const std::size_t start = pos_;
        while (bare(peek()))
          ++pos_;
        if (pos_ == start)
          fail("expected a key");
        key += s_.substr(start, pos_ - start);
      }
      skip_spaces();
      if (peek() != '.')
        return key;
      ++pos_;
      key += '.';
    }
  }

  std::string read_string()
  {
    expect('"');
    std::string out;
    for (;;)
    {
      if (eof() || peek() == '\n')
        fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"')
        return out;
      if (c != '\\')
      {
        out += c;
        continue;
      }
      const char e = s_[pos_++];
      switch (e)
      {
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  Value read_value()
  {
    const char c = peek();
    if (c == '"')
      return read_string();
    if (c == '[')
      return read_array();
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-'
                      || peek() == '.' || peek() == '_'))
      ++pos_;
    std::string token = s_.substr(start, pos_ - start);
    if (token.empty())
      fail("expected a value");
    if (token == "true")
      return true;
    if (token == "false")
      return false;
    std::erase(token, '_');
    if (token == "inf" || token == "+inf")
      return std::numeric_limits<double>::infinity();
    if (token == "-inf")
      return -std::numeric_limits<double>::infinity();
    if (token == "nan" || token == "+nan" || token == "-nan")
      return std::numeric_limits<double>::quiet_NaN();
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    const char* first = token.data() + (token[0] == '+' ? 1 : 0);
    const char* last = token.data() + token.size();
    if (is_float)
    {
      double d = 0.0;
      const auto r = std::from_chars(first, last, d);
      if (r.ec != std::errc() || r.ptr != last)
        fail("invalid number '" + token + "'");
      return d;
    }
    std::int64_t i = 0;
    const auto r = std::from_chars(first, last, i);
    if (r.ec != std::errc() || r.ptr != last)
      fail("invalid value '" + token + "'");
    return i;
  }

  Value read_array()
  {
    expect('[');
    Value::Array out;
    for (;;)
    {
      skip_blank_lines();
      if (peek() == ']')
      {
        ++pos_;
        return out;
      }
      out.push_back(read_value());
      skip_blank_lines();
      if (peek() == ',')
      {
        ++pos_;
        continue;
      }
      skip_blank_lines();
      expect(']');
      return out;
    }
  }
};

bool needs_quotes(const std::string& part)
{
  if (part.empty())
    return true;
  for (const char c : part)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      return true;
  return false;
}

std::string quote(const std::string& s)
{
  std::string out = "\"";
  for (const char c : s)
  {
    switch (c)
    {
    case '"': out += "\\\""; break;
    case '\\': out += "\\\\"; break;
    case '\n': out += "\\n"; break;
    case '\t': out += "\\t"; break;
    default: out += c;
    }
  }
  return out + "\"";
}

} // namespace

Document parse(const std::string& text) { return Reader(text).run(); }

std::string format_value(const Value& v)
{
  struct Visitor
  {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const
    {
      if (std::isnan(d))
        return "nan";
      if (std::isinf(d))
        return d > 0 ? "inf" : "-inf";
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", d);
      std::string s = buf;
      if (s.find_first_of(".eE") == std::string::npos)
        s += ".0";
      return s;
    }
    std::string operator()(const std::string& s) const { return quote(s); }
    std::string operator()(const Value::Array& a) const
    {
      std::string out = "[";
      for (std::size_t i = 0; i < a.size(); ++i)
        out += (i ? ", " : "") + format_value(a[i]);
      return out + "]";
    }
  };
  return std::visit(Visitor{}, v.data);
}

std::string serialize(const Document& doc)
{
  // Keys are grouped by everything before their last dot.
  std::map<std::string, std::vector<std::pair<std::string, const Value*>>> tables;
  for (const auto& [key, value] : doc)
  {
    const auto dot = key.rfind('.');
    const std::string table = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
    tables[table].emplace_back(leaf, &value);
  }
  const auto write_path = [](const std::string& path) {
    std::string out;
    std::size_t start = 0;
    for (;;)
    {
      const auto dot = path.find('.', start);
      const std::string part = path.substr(start, dot - start);
      out += needs_quotes(part) ? quote(part) : part;
      if (dot == std::string::npos)
        return out;
      out += '.';
      start = dot + 1;
    }
  };
  std::ostringstream o;
  bool first = true;
  for (const auto& [table, entries] : tables)
  {
    if (!table.empty())
      o << (first ? "" : "\n") << "[" << write_path(table) << "]\n";
    first = false;
    for (const auto& [leaf, value] : entries)
      o << (needs_quotes(leaf) ? quote(leaf) : leaf) << " = " << format_value(*value) << "\n";
  }
  return o.str();
}

} // namespace pfcp::toml
