#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fakejob/ingest.hpp"

// Generator for the bundled stand-in dataset. Fraudulent rows come in two
// flavours: "visible" ones carry distinctive vocabulary, a missing-logo bias
// and often no company profile; "order-only" ones share the genuine token
// distribution exactly and differ only in the word order at the start of the
// title, which a bag-of-words view cannot see.
namespace fakejob::synthetic {

struct FixtureConfig {
    std::size_t rows = 2000;
    double fraud_rate = 0.08;
    double order_only_share = 0.2;  // fraction of fraudulent rows
    std::uint64_t seed = 2020;
};

std::vector<ingest::RawPosting> make_postings(const FixtureConfig& cfg = {});

}  // namespace fakejob::synthetic
