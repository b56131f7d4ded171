#include <gtest/gtest.h>

#include <fstream>
#include <regex>

#include "fakejob/csv.hpp"
#include "fakejob/error.hpp"
#include "fakejob/ingest.hpp"
#include "fakejob/rng.hpp"
#include "test_support.hpp"

namespace fakejob {
namespace {

using testing::posting;

TEST(Csv, QuotedCommaStaysInField) {
    const auto t = csv::parse("a,b\nx,\"y,z\"\n");
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0], (csv::Row{"x", "y,z"}));
}

TEST(Csv, DoubledQuoteUnescapes) {
    const auto t = csv::parse("id,text\n1,\"he said \"\"hi\"\"\"\n");
    EXPECT_EQ(t.rows.at(0).at(1), "he said \"hi\"");
}

TEST(Csv, QuotedLineBreaksAndCrlf) {
    const auto t = csv::parse("a,b\r\n\"line1\r\nline2\",x\r\n\"\",y\r\n");
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][0], "line1\r\nline2");
    EXPECT_EQ(t.rows[1][0], "");
}

TEST(Csv, SkipsBomAndBlankLines) {
    const auto t = csv::parse("\xEF\xBB\xBF" "a,b\n\n1,2\n\n");
    EXPECT_EQ(t.header, (csv::Row{"a", "b"}));
    ASSERT_EQ(t.rows.size(), 1u);
}

TEST(Csv, FinalRecordWithoutNewline) {
    const auto t = csv::parse("a,b\n1,2");
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0], (csv::Row{"1", "2"}));
}

TEST(Csv, UnbalancedQuoteReportsRecord) {
    try {
        csv::parse("a,b\n1,2\n3,\"open\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.record(), 3u);
    }
}

TEST(Csv, StrayCharacterAfterClosingQuote) {
    EXPECT_THROW(csv::parse("a\n\"x\"y\n"), ParseError);
}

TEST(Csv, FormatQuotesOnlyWhenNeeded) {
    EXPECT_EQ(csv::format_field("plain"), "plain");
    EXPECT_EQ(csv::format_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv::format_field("say \"x\""), "\"say \"\"x\"\"\"");
    EXPECT_EQ(csv::format_field("l1\nl2"), "\"l1\nl2\"");
}

TEST(Csv, MissingFileIsIoError) {
    EXPECT_THROW(csv::read_file("/nonexistent/fakejob.csv"), IoError);
}

// Round trip over random tables drawn from an alphabet rich in separators.
TEST(Csv, WriteParseRoundTripProperty) {
    SplitMix64 rng(7);
    const std::string alphabet = "ab,\"\n\r x";
    for (int trial = 0; trial < 200; ++trial) {
        csv::Table t;
        const auto cols = 1 + rng.below(4);
        for (std::size_t c = 0; c < cols; ++c) t.header.push_back("c" + std::to_string(c));
        const auto rows = rng.below(6);
        for (std::size_t r = 0; r < rows; ++r) {
            csv::Row row;
            for (std::size_t c = 0; c < cols; ++c) {
                std::string f;
                const auto len = rng.below(6);
                for (std::size_t k = 0; k < len; ++k) f += alphabet[rng.below(alphabet.size())];
                row.push_back(f);
            }
            t.rows.push_back(row);
        }
        const auto back = csv::parse(csv::format(t));
        ASSERT_EQ(back.header, t.header);
        ASSERT_EQ(back.rows, t.rows) << "trial " << trial;
    }
}

TEST(Ingest, TortureFileRoundTrip) {
    const auto first = ingest::parse_csv(testing::data_dir() / "csv_torture.csv");
    ASSERT_EQ(first.postings.size(), 5u);
    EXPECT_EQ(first.postings[2].title, "He said \"hi\"");
    EXPECT_EQ(first.postings[1].description.find("Awesome!\nDo you"), 32u);
    EXPECT_NE(first.postings[1].description.find("service?\r\nSlick"), std::string::npos);
    EXPECT_EQ(first.postings[4].requirements, "\",\"");
    EXPECT_FALSE(first.warnings.empty());  // row 4 has an empty label

    testing::TempDir dir;
    ingest::write_csv(first.postings, dir / "again.csv");
    const auto second = ingest::parse_csv(dir / "again.csv");
    EXPECT_EQ(second.postings, first.postings);
}

TEST(Ingest, MapsColumnsByName) {
    const auto t = csv::parse("fraudulent,title,job_id\n1,Clerk,9\n");
    const auto r = ingest::postings_from_table(t);
    ASSERT_EQ(r.postings.size(), 1u);
    EXPECT_EQ(r.postings[0].job_id, 9);
    EXPECT_EQ(r.postings[0].title, "Clerk");
    EXPECT_EQ(r.postings[0].fraudulent, 1);
    EXPECT_FALSE(r.warnings.empty());  // absent columns are reported
}

TEST(Ingest, RejectsNonBinaryFlag) {
    const auto t = csv::parse("job_id,fraudulent\n1,2\n");
    EXPECT_THROW(ingest::postings_from_table(t), DataError);
}

TEST(Ingest, RejectsNonIntegerJobId) {
    const auto t = csv::parse("job_id,fraudulent\nabc,0\n");
    EXPECT_THROW(ingest::postings_from_table(t), DataError);
}

TEST(Normalize, Examples) {
    EXPECT_EQ(ingest::normalize_text("<p>Hello&amp;World</p>"), "hello world");
    EXPECT_EQ(ingest::normalize_text("Senior Manager, Sales & Marketing"), "senior manager sales marketing");
    EXPECT_EQ(ingest::normalize_text(""), "");
}

TEST(Normalize, EntitiesAndTags) {
    EXPECT_EQ(ingest::normalize_text("a&lt;b&gt;c&quot;d&#39;e&nbsp;f"), "a b c d e f");
    EXPECT_EQ(ingest::normalize_text("x<br/>y"), "x y");
    EXPECT_EQ(ingest::normalize_text("3 < 4"), "3 4");
    EXPECT_EQ(ingest::normalize_text("  C++\tDeveloper\n"), "c developer");
}

TEST(Normalize, IdempotentAndRegularProperty) {
    SplitMix64 rng(11);
    const std::string alphabet = "aZ9 <>&;p/#!,\n\t\xC3\xA9" "amp";
    const std::regex shape("^([a-z0-9]+( [a-z0-9]+)*)?$");
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        const auto len = rng.below(40);
        for (std::size_t k = 0; k < len; ++k) s += alphabet[rng.below(alphabet.size())];
        const auto once = ingest::normalize_text(s);
        ASSERT_EQ(ingest::normalize_text(once), once) << s;
        ASSERT_TRUE(std::regex_match(once, shape)) << once;
    }
}

TEST(Assemble, SummaryCounts) {
    const auto d = ingest::assemble_dataset({posting(1, "a", "", 0), posting(2, "b", "", 1)});
    EXPECT_EQ(d.summary.total, 2u);
    EXPECT_EQ(d.summary.genuine, 1u);
    EXPECT_EQ(d.summary.fake, 1u);
}

TEST(Assemble, EmptyTextGivesEmptyFullText) {
    const auto d = ingest::assemble_dataset({posting(1, "", "", 0)});
    EXPECT_EQ(d.postings[0].full_text, "");
}

TEST(Assemble, JoinsTextFieldsInOrder) {
    auto p = posting(1, "Title", "Desc", 0);
    p.company_profile = "Profile";
    p.requirements = "";
    p.benefits = "Perks!";
    const auto d = ingest::assemble_dataset({p});
    EXPECT_EQ(d.postings[0].full_text, "title profile desc perks");
    EXPECT_EQ(d.postings[0].title_clean, "title");
}

TEST(Assemble, PreservesOrder) {
    std::vector<ingest::RawPosting> rows;
    for (int i = 0; i < 20; ++i) rows.push_back(posting(100 - i, "t" + std::to_string(i), "", i % 2));
    const auto d = ingest::assemble_dataset(rows);
    ASSERT_EQ(d.postings.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(d.postings[i].raw, rows[i]);
}

TEST(Assemble, RejectsDuplicatesAndEmpty) {
    EXPECT_THROW(ingest::assemble_dataset({}), DataError);
    EXPECT_THROW(ingest::assemble_dataset({posting(1, "", "", 0), posting(1, "", "", 0)}), DataError);
}

}  // namespace
}  // namespace fakejob
