#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ipp::text {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

bool parse_double(std::string_view token, double& out);
bool parse_int(std::string_view token, std::int64_t& out);
bool parse_uint(std::string_view token, std::uint64_t& out);

std::vector<std::string_view> split_ws(std::string_view line);

/// FNV-1a 64-bit; used for content hashes in manifests and output dir names.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Line cursor for the text file formats; tracks 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  /// Next line without the terminator; false at end of input.
  bool next(std::string_view& line);
  std::size_t line_number() const { return line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

}  // namespace ipp::text
