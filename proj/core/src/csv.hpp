#pragma once

// Minimal RFC 4180 reader/writer for the tabular interchange files.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trajclust::csv {

class Reader {
public:
    // Reads the header line immediately; `source` names the stream in errors.
    Reader(std::istream& in, std::string source);

    // Throws a schema error naming the first missing column.
    void require_columns(const std::vector<std::string_view>& names) const;
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;

    // Advances to the next non-empty record; false at end of stream.
    bool next();

    const std::string& field(std::size_t column) const;
    std::size_t line() const noexcept { return line_; }
    const std::string& source() const noexcept { return source_; }

    // Parse helpers that raise schema errors with file/line context.
    double parse_double(std::size_t column) const;
    bool parse_bool(std::size_t column) const;
    unsigned long long parse_unsigned(std::size_t column) const;
    [[noreturn]] void fail(const std::string& message) const;

private:
    std::istream& in_;
    std::string source_;
    std::vector<std::string> header_;
    std::vector<std::string> fields_;
    std::size_t line_ = 0;
};

// Splits one physical line; quoted fields may contain commas and "" escapes.
std::vector<std::string> split_line(std::string_view line);

std::string escape(std::string_view field);

// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);
// Fixed-point representation with `digits` decimals.
std::string format_fixed(double value, int digits);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

} // namespace trajclust::csv
