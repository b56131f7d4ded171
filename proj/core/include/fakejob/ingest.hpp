#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fakejob/csv.hpp"

namespace fakejob::ingest {

// One job advertisement as it appears in the CSV. Missing text is "".
struct RawPosting {
    std::int64_t job_id = 0;
    std::string title;
    std::string location;
    std::string department;
    std::string salary_range;
    std::string company_profile;
    std::string description;
    std::string requirements;
    std::string benefits;
    int telecommuting = 0;
    int has_company_logo = 0;
    int has_questions = 0;
    std::string employment_type;
    std::string required_experience;
    std::string required_education;
    std::string industry;
    std::string function;
    int fraudulent = 0;

    friend bool operator==(const RawPosting&, const RawPosting&) = default;
};

struct CleanPosting {
    RawPosting raw;
    std::string title_clean;
    // normalize(title, company_profile, description, requirements, benefits)
    // joined by single spaces, empty pieces skipped.
    std::string full_text;
};

struct Summary {
    std::size_t total = 0;
    std::size_t genuine = 0;
    std::size_t fake = 0;
};

struct Dataset {
    std::vector<CleanPosting> postings;
    Summary summary;
};

struct ParseResult {
    std::vector<RawPosting> postings;
    std::vector<std::string> warnings;
};

/// Header names in canonical order (also the order write_csv emits).
const std::vector<std::string>& column_names();

ParseResult parse_csv(const std::filesystem::path& path);
ParseResult postings_from_table(const csv::Table& table);

csv::Table to_table(const std::vector<RawPosting>& postings);
std::string write_csv(const std::vector<RawPosting>& postings);
void write_csv(const std::vector<RawPosting>& postings, const std::filesystem::path& path);

std::string normalize_text(std::string_view s);

/// Throws DataError on an empty input or duplicate job_id.
Dataset assemble_dataset(const std::vector<RawPosting>& rows);

}  // namespace fakejob::ingest
