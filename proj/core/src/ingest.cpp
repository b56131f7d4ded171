#include "fakejob/ingest.hpp"

#include <array>
#include <charconv>
#include <unordered_set>

#include <fmt/format.h>

#include "fakejob/error.hpp"

namespace fakejob::ingest {

namespace {

enum class Col {
    job_id, title, location, department, salary_range, company_profile,
    description, requirements, benefits, telecommuting, has_company_logo,
    has_questions, employment_type, required_experience, required_education,
    industry, function, fraudulent, count_
};

constexpr std::size_t kColumns = static_cast<std::size_t>(Col::count_);

std::string* text_field(RawPosting& p, Col c) {
    switch (c) {
        case Col::title: return &p.title;
        case Col::location: return &p.location;
        case Col::department: return &p.department;
        case Col::salary_range: return &p.salary_range;
        case Col::company_profile: return &p.company_profile;
        case Col::description: return &p.description;
        case Col::requirements: return &p.requirements;
        case Col::benefits: return &p.benefits;
        case Col::employment_type: return &p.employment_type;
        case Col::required_experience: return &p.required_experience;
        case Col::required_education: return &p.required_education;
        case Col::industry: return &p.industry;
        case Col::function: return &p.function;
        default: return nullptr;
    }
}

int* flag_field(RawPosting& p, Col c) {
    switch (c) {
        case Col::telecommuting: return &p.telecommuting;
        case Col::has_company_logo: return &p.has_company_logo;
        case Col::has_questions: return &p.has_questions;
        case Col::fraudulent: return &p.fraudulent;
        default: return nullptr;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_alnum_ascii(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

char lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

struct Entity {
    std::string_view name;
    char replacement;
};

constexpr std::array<Entity, 6> kEntities{{
    {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'},
    {"&quot;", '"'}, {"&#39;", '\''}, {"&nbsp;", ' '},
}};

}  // namespace

const std::vector<std::string>& column_names() {
    static const std::vector<std::string> names{
        "job_id", "title", "location", "department", "salary_range",
        "company_profile", "description", "requirements", "benefits",
        "telecommuting", "has_company_logo", "has_questions", "employment_type",
        "required_experience", "required_education", "industry", "function",
        "fraudulent"};
    return names;
}

ParseResult postings_from_table(const csv::Table& table) {
    ParseResult result;
    const auto& names = column_names();

    std::array<std::size_t, kColumns> index{};
    for (std::size_t c = 0; c < kColumns; ++c) {
        index[c] = table.column(names[c]);
        if (index[c] == csv::Table::npos) {
            result.warnings.push_back(
                fmt::format("column '{}' missing; treated as empty", names[c]));
        }
    }

    std::array<std::size_t, kColumns> empty_flags{};
    result.postings.reserve(table.rows.size());

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t record_no = r + 2;  // header is record 1
        RawPosting p;

        auto cell = [&](Col c) -> std::string_view {
            const auto i = index[static_cast<std::size_t>(c)];
            if (i == csv::Table::npos || i >= row.size()) return {};
            return row[i];
        };

        for (std::size_t c = 0; c < kColumns; ++c) {
            const auto col = static_cast<Col>(c);
            if (auto* s = text_field(p, col)) {
                *s = std::string(cell(col));
            } else if (auto* f = flag_field(p, col)) {
                const auto v = trim(cell(col));
                if (v.empty()) {
                    *f = 0;
                    if (index[c] != csv::Table::npos) ++empty_flags[c];
                } else if (v == "0" || v == "1") {
                    *f = v[0] - '0';
                } else {
                    throw DataError(fmt::format("record {}: column '{}' holds '{}', expected 0 or 1",
                                                record_no, names[c], v));
                }
            }
        }

        const auto id_text = trim(cell(Col::job_id));
        if (id_text.empty()) {
            p.job_id = static_cast<std::int64_t>(r + 1);
        } else {
            std::int64_t id = 0;
            const auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
            if (ec != std::errc{} || ptr != id_text.data() + id_text.size()) {
                throw DataError(fmt::format("record {}: job_id '{}' is not an integer", record_no, id_text));
            }
            p.job_id = id;
        }
        result.postings.push_back(std::move(p));
    }

    for (std::size_t c = 0; c < kColumns; ++c) {
        if (empty_flags[c] > 0) {
            result.warnings.push_back(fmt::format("{} empty value(s) in '{}' defaulted to 0",
                                                  empty_flags[c], names[c]));
        }
    }
    return result;
}

ParseResult parse_csv(const std::filesystem::path& path) {
    return postings_from_table(csv::read_file(path));
}

csv::Table to_table(const std::vector<RawPosting>& postings) {
    csv::Table table;
    table.header = column_names();
    table.rows.reserve(postings.size());
    for (const auto& p : postings) {
        table.rows.push_back({
            std::to_string(p.job_id), p.title, p.location, p.department, p.salary_range,
            p.company_profile, p.description, p.requirements, p.benefits,
            std::to_string(p.telecommuting), std::to_string(p.has_company_logo),
            std::to_string(p.has_questions), p.employment_type, p.required_experience,
            p.required_education, p.industry, p.function, std::to_string(p.fraudulent)});
    }
    return table;
}

std::string write_csv(const std::vector<RawPosting>& postings) {
    return csv::format(to_table(postings));
}

void write_csv(const std::vector<RawPosting>& postings, const std::filesystem::path& path) {
    csv::write_file(to_table(postings), path);
}

std::string normalize_text(std::string_view s) {
    // Pass 1: drop <...> tags (replaced by a space) and decode entities.
    std::string decoded;
    decoded.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] == '<') {
            const auto close = s.find('>', i + 1);
            if (close != std::string_view::npos) {
                decoded.push_back(' ');
                i = close + 1;
                continue;
            }
        } else if (s[i] == '&') {
            bool matched = false;
            for (const auto& e : kEntities) {
                if (s.substr(i).starts_with(e.name)) {
                    decoded.push_back(e.replacement);
                    i += e.name.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        decoded.push_back(s[i]);
        ++i;
    }

    // Pass 2: keep ASCII alphanumerics (lowercased); everything else is a
    // separator. Emits single spaces between tokens, none at the ends.
    std::string out;
    out.reserve(decoded.size());
    bool pending_space = false;
    for (char ch : decoded) {
        if (is_alnum_ascii(static_cast<unsigned char>(ch))) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(lower_ascii(ch));
        } else {
            pending_space = true;
        }
    }
    return out;
}

Dataset assemble_dataset(const std::vector<RawPosting>& rows) {
    if (rows.empty()) throw DataError("cannot assemble a dataset from zero rows");

    Dataset d;
    d.postings.reserve(rows.size());
    std::unordered_set<std::int64_t> seen;
    seen.reserve(rows.size());

    for (const auto& raw : rows) {
        if (!seen.insert(raw.job_id).second) {
            throw DataError(fmt::format("duplicate job_id {}", raw.job_id));
        }
        CleanPosting p{raw, normalize_text(raw.title), {}};
        for (const std::string* src : {&raw.title, &raw.company_profile, &raw.description,
                                       &raw.requirements, &raw.benefits}) {
            auto piece = normalize_text(*src);
            if (piece.empty()) continue;
            if (!p.full_text.empty()) p.full_text.push_back(' ');
            p.full_text += piece;
        }
        ++d.summary.total;
        if (raw.fraudulent == 1) {
            ++d.summary.fake;
        } else {
            ++d.summary.genuine;
        }
        d.postings.push_back(std::move(p));
    }
    return d;
}

}  // namespace fakejob::ingest
