#include "fakejob/csv.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "fakejob/error.hpp"

namespace fakejob::csv {

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return npos;
}

namespace {

enum class State { field_start, unquoted, quoted, quote_in_quoted };

}  // namespace

Table parse(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<Row> records;
    Row record;
    std::string field;
    State state = State::field_start;
    std::size_t record_no = 1;
    bool record_has_content = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        // A physically blank line is not a record.
        if (!(record.size() == 1 && record[0].empty() && !record_has_content)) {
            records.push_back(std::move(record));
        }
        record.clear();
        record_has_content = false;
        ++record_no;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        switch (state) {
            case State::field_start:
                if (ch == '"') {
                    state = State::quoted;
                    record_has_content = true;
                } else if (ch == ',') {
                    record_has_content = true;
                    end_field();
                } else if (ch == '\n') {
                    end_record();
                } else if (ch == '\r') {
                    if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                    end_record();
                } else {
                    field.push_back(ch);
                    record_has_content = true;
                    state = State::unquoted;
                }
                break;
            case State::unquoted:
                if (ch == ',') {
                    end_field();
                    state = State::field_start;
                } else if (ch == '\n') {
                    end_record();
                    state = State::field_start;
                } else if (ch == '\r') {
                    if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                    end_record();
                    state = State::field_start;
                } else {
                    field.push_back(ch);
                }
                break;
            case State::quoted:
                if (ch == '"') {
                    state = State::quote_in_quoted;
                } else {
                    field.push_back(ch);
                }
                break;
            case State::quote_in_quoted:
                if (ch == '"') {
                    field.push_back('"');
                    state = State::quoted;
                } else if (ch == ',') {
                    end_field();
                    state = State::field_start;
                } else if (ch == '\n') {
                    end_record();
                    state = State::field_start;
                } else if (ch == '\r') {
                    if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                    end_record();
                    state = State::field_start;
                } else {
                    throw ParseError(
                        fmt::format("record {}: unexpected character after closing quote", record_no),
                        record_no);
                }
                break;
        }
    }

    if (state == State::quoted) {
        throw ParseError(fmt::format("record {}: unbalanced quotes", record_no), record_no);
    }
    if (state != State::field_start || !field.empty() || !record.empty()) {
        end_record();
    }

    Table table;
    if (records.empty()) return table;
    table.header = std::move(records.front());
    table.rows.assign(std::make_move_iterator(records.begin() + 1),
                      std::make_move_iterator(records.end()));
    return table;
}

Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError(fmt::format("error reading '{}'", path.string()));
    return parse(buffer.str());
}

std::string format_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

namespace {

void append_row(std::string& out, const Row& row) {
    // A single empty field would read back as a blank line; quote it.
    if (row.size() == 1 && row[0].empty()) {
        out += "\"\"\n";
        return;
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out.push_back(',');
        out += format_field(row[i]);
    }
    out.push_back('\n');
}

}  // namespace

std::string format(const Table& table) {
    std::string out;
    append_row(out, table.header);
    for (const auto& row : table.rows) append_row(out, row);
    return out;
}

void write_file(const Table& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    const auto text = format(table);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError(fmt::format("error writing '{}'", path.string()));
}

}  // namespace fakejob::csv
