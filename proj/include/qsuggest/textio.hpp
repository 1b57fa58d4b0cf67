#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace qsuggest {

/// 17 significant digits: enough to round-trip any double.
std::string format_real(double v);

/// Throws DataError on anything but a complete number.
double parse_real(std::string_view text);
std::int64_t parse_integer(std::string_view text);
std::uint64_t parse_unsigned(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);

/// Line-oriented reader for the versioned artifact formats.
class ArtifactReader {
 public:
  ArtifactReader(std::istream& in, std::string artifact) : in_(in), artifact_(std::move(artifact)) {}

  /// Next line; throws DataError at end of input.
  std::string line();
  /// Reads `key value` and returns the value.
  std::string field(std::string_view key);
  void expect(std::string_view exact);
  [[noreturn]] void fail(const std::string& message) const;

 private:
  std::istream& in_;
  std::string artifact_;
  std::size_t line_no_ = 0;
};

}  // namespace qsuggest
