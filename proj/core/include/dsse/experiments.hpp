#pragma once

#include "dsse/config.hpp"
#include "dsse/corpus.hpp"
#include "dsse/system.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dsse {

// Measurement helpers shared by `dsse bench` and the acceptance runner.

struct StorageComparison
{
    std::uint64_t upsilon = 0;      // derived threshold used for the mixed index
    std::uint64_t max_frequency = 0;
    std::size_t keywords = 0;
    std::size_t bitvec_keywords = 0; // in the mixed index
    std::size_t mixed_bytes = 0;
    std::size_t bitvec_bytes = 0;     // every keyword a bit vector
    std::size_t list_bytes = 0;       // every keyword a list of max_frequency slots
    bool list_materialized = false;   // false: list_bytes from the block-count formula
};

/// Builds the mixed index and the all-bit-vector index and measures their
/// encoded size. The all-list index is built only when it has at most
/// `max_list_blocks` blocks; otherwise its size comes from block counts.
StorageComparison compare_storage(const Corpus& corpus, const EngineConfig& config,
                                  std::size_t max_list_blocks = 2'000'000);

/// Search index size for an all-list index: z * ceil(upsilon / cp) list blocks.
std::size_t list_index_bytes(std::size_t keywords, std::uint64_t upsilon, unsigned id_bits, bool auth);

struct LatencySample
{
    std::vector<double> ms;

    double median() const;
    double mean() const;
};

/// Times `queries` searches for keywords drawn uniformly from `keywords`.
/// With `groups` non-empty the queries are issued by a user holding them.
LatencySample time_searches(CloudServer& server, const Owner& owner, const std::vector<std::string>& keywords,
                            std::size_t queries, std::uint64_t seed, const std::vector<GroupId>& groups = {});

struct LinearFit
{
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

/// Copies of `base` with ids continuing after the originals and names
/// suffixed by the copy number, until at least `n` documents exist.
Corpus replicate_corpus(const Corpus& base, std::size_t n);

std::vector<std::string> vocabulary(const Corpus& corpus);

} // namespace dsse
