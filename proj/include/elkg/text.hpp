#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elkg {

/// Whole-file read/write helpers. Both throw FormatError on IO failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal (fixed notation, never exponent) that round-trips.
std::string format_decimal(double v);

/// Decimal with at most `digits` fractional digits, trailing zeros trimmed.
/// `v` is rounded half away from zero at that precision.
std::string format_fixed_trimmed(double v, int digits);

/// Strict full-string number parse (leading/trailing ASCII blanks allowed).
/// Rejects NaN/inf spellings.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// RFC 4180 CSV. Records may contain quoted separators, quotes and newlines.
class CsvReader {
 public:
  explicit CsvReader(std::string text, char delimiter = ',');

  /// Next record, or nullopt at end of input. Throws ParseError on an
  /// unterminated quoted field.
  bool next(std::vector<std::string>& fields);

  /// 1-based line on which the most recently returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::string text_;
  char delim_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Quote a field when it contains the delimiter, a quote, CR or LF.
std::string csv_field(std::string_view s, char delimiter = ',');

/// Append one CSV record terminated by `\n`.
void append_csv_record(std::string& out, const std::vector<std::string>& fields,
                       char delimiter = ',');

}  // namespace elkg
