#include "fakejob/features.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "fakejob/error.hpp"

namespace fakejob::features {

namespace {

std::vector<TermCount> ranked_counts(std::span<const std::string> texts) {
    std::unordered_map<std::string_view, std::size_t> counts;
    for (const auto& text : texts) {
        for (auto tok : tokenize(text)) ++counts[tok];
    }
    std::vector<TermCount> ranked;
    ranked.reserve(counts.size());
    for (const auto& [tok, n] : counts) ranked.emplace_back(std::string(tok), n);
    std::sort(ranked.begin(), ranked.end(), [](const TermCount& a, const TermCount& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranked;
}

}  // namespace

std::vector<std::string_view> tokenize(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < text.size() && !(text[i] == ' ' || text[i] == '\t' || text[i] == '\n' || text[i] == '\r')) ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

Vocabulary::Vocabulary() : id_to_token_{std::string(kPadToken), std::string(kOovToken)} {
    token_to_id_.emplace(kPadToken, kPadId);
    token_to_id_.emplace(kOovToken, kOovId);
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus, std::size_t max_size) {
    if (max_size < 3) throw ContractError(fmt::format("vocabulary max_size must be >= 3, got {}", max_size));
    Vocabulary v;
    const auto ranked = ranked_counts(corpus);
    const std::size_t keep = std::min(ranked.size(), max_size - 2);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto id = static_cast<TokenId>(v.id_to_token_.size());
        v.id_to_token_.push_back(ranked[i].first);
        v.token_to_id_.emplace(ranked[i].first, id);
    }
    return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token) {
    if (id_to_token.size() < 2 || id_to_token[0] != kPadToken || id_to_token[1] != kOovToken) {
        throw DataError("stored vocabulary must start with the PAD and OOV tokens");
    }
    Vocabulary v;
    v.id_to_token_ = std::move(id_to_token);
    v.token_to_id_.clear();
    for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
        if (!v.token_to_id_.emplace(v.id_to_token_[i], static_cast<TokenId>(i)).second) {
            throw DataError(fmt::format("stored vocabulary repeats token '{}'", v.id_to_token_[i]));
        }
    }
    return v;
}

TokenId Vocabulary::id_of(std::string_view token) const {
    // Heterogeneous lookup on unordered_map needs C++20 transparent hashing,
    // which libstdc++ 11 lacks.
    const auto it = token_to_id_.find(std::string(token));
    return it == token_to_id_.end() ? kOovId : it->second;
}

std::vector<TokenId> encode_sequence(std::string_view text, const Vocabulary& vocab, std::size_t length) {
    if (length == 0) throw ContractError("sequence length must be >= 1");
    std::vector<TokenId> ids(length, kPadId);
    std::size_t pos = 0;
    for (auto tok : tokenize(text)) {
        if (pos == length) break;
        ids[pos++] = vocab.id_of(tok);
    }
    return ids;
}

std::size_t CategoricalEncoders::width() const {
    std::size_t w = 0;
    for (const auto& c : columns) w += c.categories.size();
    return w;
}

const std::vector<std::string>& categorical_columns() {
    static const std::vector<std::string> cols{
        "employment_type", "required_experience", "required_education",
        "industry", "function", "country"};
    return cols;
}

std::string country_of(std::string_view location) {
    auto head = location.substr(0, location.find(','));
    while (!head.empty() && head.front() == ' ') head.remove_prefix(1);
    while (!head.empty() && head.back() == ' ') head.remove_suffix(1);
    std::string out(head);
    for (auto& ch : out) {
        if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
    }
    return out;
}

std::string categorical_value(const ingest::RawPosting& p, std::string_view column) {
    if (column == "employment_type") return p.employment_type;
    if (column == "required_experience") return p.required_experience;
    if (column == "required_education") return p.required_education;
    if (column == "industry") return p.industry;
    if (column == "function") return p.function;
    if (column == "country") return country_of(p.location);
    throw ContractError(fmt::format("unknown categorical column '{}'", column));
}

CategoricalEncoders fit_categorical_encoders(std::span<const ingest::CleanPosting> train) {
    if (train.empty()) throw DataError("cannot fit categorical encoders on an empty split");
    CategoricalEncoders enc;
    for (const auto& name : categorical_columns()) {
        std::set<std::string> values;
        for (const auto& p : train) {
            auto v = categorical_value(p.raw, name);
            if (!v.empty()) values.insert(std::move(v));
        }
        enc.columns.push_back({name, {values.begin(), values.end()}});
    }
    return enc;
}

CategoricalEncoders fit_categorical_encoders(const ingest::Dataset& d, std::span<const std::size_t> train_rows) {
    std::vector<ingest::CleanPosting> subset;
    subset.reserve(train_rows.size());
    for (auto i : train_rows) subset.push_back(d.postings.at(i));
    return fit_categorical_encoders(subset);
}

std::vector<double> encode_numeric(const ingest::CleanPosting& p, const CategoricalEncoders& enc) {
    std::vector<double> v;
    v.reserve(kFlagFeatures + enc.width());
    v.push_back(p.raw.telecommuting);
    v.push_back(p.raw.has_company_logo);
    v.push_back(p.raw.has_questions);
    v.push_back(p.raw.salary_range.empty() ? 0.0 : 1.0);
    for (const auto& col : enc.columns) {
        const auto value = categorical_value(p.raw, col.name);
        const auto it = std::lower_bound(col.categories.begin(), col.categories.end(), value);
        const bool known = !value.empty() && it != col.categories.end() && *it == value;
        const auto hot = known ? static_cast<std::size_t>(it - col.categories.begin()) : col.categories.size();
        for (std::size_t k = 0; k < col.categories.size(); ++k) v.push_back(k == hot ? 1.0 : 0.0);
    }
    return v;
}

std::vector<std::string> numeric_feature_names(const CategoricalEncoders& enc) {
    std::vector<std::string> names{"telecommuting", "has_company_logo", "has_questions", "has_salary"};
    for (const auto& col : enc.columns) {
        for (const auto& cat : col.categories) names.push_back(col.name + "=" + cat);
    }
    return names;
}

EncodedExample encode_example(const ingest::CleanPosting& p, const Vocabulary& vocab,
                              const CategoricalEncoders& enc, std::size_t length) {
    return {encode_sequence(p.full_text, vocab, length), encode_numeric(p, enc), p.raw.fraudulent};
}

std::vector<TermCount> term_frequencies(std::span<const std::string> texts, std::size_t top_k) {
    auto ranked = ranked_counts(texts);
    if (ranked.size() > top_k) ranked.resize(top_k);
    return ranked;
}

std::vector<FlagDistribution> binary_feature_distribution(const ingest::Dataset& d) {
    std::vector<FlagDistribution> out{
        {"telecommuting"}, {"has_company_logo"}, {"has_questions"}, {"fraudulent"}};
    for (const auto& p : d.postings) {
        const int flags[] = {p.raw.telecommuting, p.raw.has_company_logo, p.raw.has_questions, p.raw.fraudulent};
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (flags[k] == 1) {
                ++out[k].ones;
            } else {
                ++out[k].zeros;
            }
        }
    }
    return out;
}

EdaReport exploratory_analysis(const ingest::Dataset& d, std::size_t top_k) {
    std::vector<std::string> titles;
    std::vector<std::string> texts;
    titles.reserve(d.postings.size());
    texts.reserve(d.postings.size());
    for (const auto& p : d.postings) {
        titles.push_back(p.title_clean);
        texts.push_back(p.full_text);
    }
    return {binary_feature_distribution(d), term_frequencies(titles, top_k), term_frequencies(texts, top_k)};
}

std::string eda_json(const EdaReport& report) {
    nlohmann::ordered_json j;
    auto& dist = j["binary_distribution"];
    dist = nlohmann::ordered_json::object();
    for (const auto& f : report.binary_distribution) dist[f.name] = {{"zeros", f.zeros}, {"ones", f.ones}};
    auto terms = [](const std::vector<TermCount>& tc) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& [tok, n] : tc) arr.push_back({tok, n});
        return arr;
    };
    j["title_terms"] = terms(report.title_terms);
    j["full_text_terms"] = terms(report.full_text_terms);
    return j.dump(2);
}

}  // namespace fakejob::features
