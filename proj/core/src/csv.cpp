#include "csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <system_error>

#include "trajclust/error.hpp"

namespace trajclust::csv {

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.push_back(std::move(current));
    return out;
}

Reader::Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        header_ = split_line(line);
        for (auto& h : header_) {
            // tolerate a UTF-8 byte order mark on the first column
            if (h.size() >= 3 && h.compare(0, 3, "\xEF\xBB\xBF") == 0) h.erase(0, 3);
        }
        return;
    }
    throw Error(ErrorCategory::schema, source_ + ": missing header line");
}

bool Reader::has_column(std::string_view name) const {
    return std::find(header_.begin(), header_.end(), name) != header_.end();
}

std::size_t Reader::column(std::string_view name) const {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) {
        throw Error(ErrorCategory::schema,
                    source_ + ": missing column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header_.begin());
}

void Reader::require_columns(const std::vector<std::string_view>& names) const {
    for (auto name : names) (void)column(name);
}

bool Reader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fields_ = split_line(line);
        if (fields_.size() != header_.size()) {
            fail("expected " + std::to_string(header_.size()) + " fields, found " +
                 std::to_string(fields_.size()));
        }
        return true;
    }
    return false;
}

const std::string& Reader::field(std::size_t column) const { return fields_.at(column); }

void Reader::fail(const std::string& message) const {
    throw Error(ErrorCategory::schema, source_ + ":" + std::to_string(line_) + ": " + message);
}

double Reader::parse_double(std::size_t column) const {
    const std::string& text = field(column);
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first != last && *first == ' ') ++first;
    while (last != first && *(last - 1) == ' ') --last;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || first == last) {
        fail("cannot parse number '" + text + "' in column '" + header_[column] + "'");
    }
    return value;
}

bool Reader::parse_bool(std::size_t column) const {
    const std::string& text = field(column);
    if (text == "1") return true;
    if (text == "0") return false;
    fail("expected 0/1 in column '" + header_[column] + "', found '" + text + "'");
}

unsigned long long Reader::parse_unsigned(std::size_t column) const {
    const std::string& text = field(column);
    unsigned long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        fail("cannot parse integer '" + text + "' in column '" + header_[column] + "'");
    }
    return value;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

std::string format_fixed(double value, int digits) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                         std::chars_format::fixed, digits);
    std::string out(buf.data(), ptr);
    if (out.starts_with('-') && out.find_first_not_of("-0.") == std::string::npos) {
        out.erase(0, 1); // no "-0.00"
    }
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

} // namespace trajclust::csv
