#include "qsuggest/textio.hpp"

#include <charconv>

#include <fmt/format.h>

#include "qsuggest/error.hpp"

namespace qsuggest {

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

double parse_real(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("not a number: '{}'", text));
  }
  return v;
}

std::int64_t parse_integer(std::string_view text) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("not an integer: '{}'", text));
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("not an unsigned integer: '{}'", text));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string ArtifactReader::line() {
  std::string s;
  if (!std::getline(in_, s)) fail("unexpected end of input");
  ++line_no_;
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string ArtifactReader::field(std::string_view key) {
  const auto s = line();
  if (s.size() <= key.size() || s.compare(0, key.size(), key) != 0 || s[key.size()] != ' ') {
    fail(fmt::format("expected '{} <value>', got '{}'", key, s));
  }
  return s.substr(key.size() + 1);
}

void ArtifactReader::expect(std::string_view exact) {
  const auto s = line();
  if (s != exact) fail(fmt::format("expected '{}', got '{}'", exact, s));
}

void ArtifactReader::fail(const std::string& message) const {
  throw DataError(fmt::format("{} line {}: {}", artifact_, line_no_, message));
}

}  // namespace qsuggest
