#pragma once

#include <dsse/corpus.hpp>
#include <dsse/payload.hpp>
#include <dsse/system.hpp>

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace dsse::testing {

// The worked deletion example: 512 documents, Υ = 16 (two list blocks of 8).
// w1 is a bit vector holding D2 and D300; w2 is a list with D56 at block 1
// slot 8 and D2 at block 2 slot 1; w3 is a list with D300 at block 2 slot 5.
struct Example41
{
    Corpus corpus;
    std::map<std::string, PlainPayload> payloads;
    StorageParams storage;
};

Example41 example41();

/// Small random corpus over words "t0".."t<vocab-1>" with random groups.
Corpus random_corpus(std::mt19937_64& rng, std::size_t n, std::size_t vocab, std::size_t groups = 1,
                     std::size_t max_words = 12);

/// Naive scanner used as an independent keyword oracle: lowercases ASCII
/// letters, keeps runs of [a-z0-9] of length >= 2.
std::set<std::string> naive_tokens(const std::string& body);

/// Membership from the naive scanner, one pass per document.
std::map<std::string, std::vector<DocId>> naive_index(const Corpus& corpus);

EngineConfig test_config(unsigned m = 1, bool auth = false, std::uint64_t seed = 7);

} // namespace dsse::testing
