#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mobkit {

/// Splits one CSV line on commas. No quoting support: identifiers and
/// numbers only, which is all the file formats here contain.
std::vector<std::string> split_csv_line(const std::string& line);

/// Line reader that tracks 1-based line numbers for error reporting and
/// skips a trailing empty line.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Reads the next non-empty line into fields; false at end of input.
    bool next(std::vector<std::string>& fields);
    int line_number() const { return line_; }

private:
    std::istream& in_;
    int line_ = 0;
};

/// Formats a double with 17 significant digits so that parsing the text
/// reproduces the exact bit pattern.
std::string format_double(double v);

/// Strict double parse; throws mobkit::Error mentioning `context` on failure.
double parse_double(const std::string& s, const std::string& context);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace mobkit
