#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fakejob/ingest.hpp"

namespace fakejob::features {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kOovId = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kOovToken = "<oov>";

inline constexpr std::size_t kDefaultVocabSize = 10000;
inline constexpr std::size_t kDefaultSequenceLength = 256;

// Frequency-ranked token table. Ids 0 and 1 are PAD and OOV; the rest are
// assigned by descending corpus count, ties broken by ascending token.
class Vocabulary {
public:
    Vocabulary();

    static Vocabulary build(std::span<const std::string> corpus, std::size_t max_size);
    /// Rebuild from a stored id->token list; entries 0 and 1 must be PAD/OOV.
    static Vocabulary from_tokens(std::vector<std::string> id_to_token);

    TokenId id_of(std::string_view token) const;
    const std::string& token(TokenId id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const noexcept { return id_to_token_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, TokenId> token_to_id_;
};

/// Whitespace tokens of already-normalized text.
std::vector<std::string_view> tokenize(std::string_view text);

/// Unknown tokens map to OOV; truncated to the first `length` tokens or
/// right-padded with PAD.
std::vector<TokenId> encode_sequence(std::string_view text, const Vocabulary& vocab, std::size_t length);

struct CategoricalColumn {
    std::string name;
    std::vector<std::string> categories;  // sorted, no empty value
};

// One-hot encoders for the categorical columns, in a fixed column order.
struct CategoricalEncoders {
    std::vector<CategoricalColumn> columns;

    std::size_t width() const;
};

/// Columns encoded one-hot, in output order.
const std::vector<std::string>& categorical_columns();

/// Text before the first comma of `location`, trimmed and uppercased.
std::string country_of(std::string_view location);

/// The categorical value a posting holds for a named column.
std::string categorical_value(const ingest::RawPosting& p, std::string_view column);

CategoricalEncoders fit_categorical_encoders(std::span<const ingest::CleanPosting> train);
CategoricalEncoders fit_categorical_encoders(const ingest::Dataset& d, std::span<const std::size_t> train_rows);

inline constexpr std::size_t kFlagFeatures = 4;

/// [telecommuting, has_company_logo, has_questions, has_salary, one-hot blocks...]
std::vector<double> encode_numeric(const ingest::CleanPosting& p, const CategoricalEncoders& enc);
std::vector<std::string> numeric_feature_names(const CategoricalEncoders& enc);

struct EncodedExample {
    std::vector<TokenId> token_ids;
    std::vector<double> numeric;
    int label = 0;
};

EncodedExample encode_example(const ingest::CleanPosting& p, const Vocabulary& vocab,
                              const CategoricalEncoders& enc, std::size_t length);

using TermCount = std::pair<std::string, std::size_t>;

/// Global counts, descending, ties ascending by token, truncated to top_k.
std::vector<TermCount> term_frequencies(std::span<const std::string> texts, std::size_t top_k);

struct FlagDistribution {
    std::string name;
    std::size_t zeros = 0;
    std::size_t ones = 0;
};

/// telecommuting, has_company_logo, has_questions, fraudulent.
std::vector<FlagDistribution> binary_feature_distribution(const ingest::Dataset& d);

struct EdaReport {
    std::vector<FlagDistribution> binary_distribution;
    std::vector<TermCount> title_terms;
    std::vector<TermCount> full_text_terms;
};

EdaReport exploratory_analysis(const ingest::Dataset& d, std::size_t top_k);
/// {"binary_distribution": {...}, "title_terms": [[tok, n], ...], "full_text_terms": [...]}
std::string eda_json(const EdaReport& report);

}  // namespace fakejob::features
