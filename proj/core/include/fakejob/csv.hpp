#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fakejob::csv {

using Row = std::vector<std::string>;

struct Table {
    Row header;
    std::vector<Row> rows;

    /// Index of a header column, or npos when absent.
    std::size_t column(std::string_view name) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// RFC 4180 reader. Quoted fields may hold commas, doubled quotes and line
// breaks; records end at LF or CRLF. A leading UTF-8 BOM is skipped.
// Throws ParseError (with the 1-based record number) on an unterminated
// quote or stray characters after a closing quote.
Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string format_field(std::string_view field);
std::string format(const Table& table);
void write_file(const Table& table, const std::filesystem::path& path);

}  // namespace fakejob::csv
