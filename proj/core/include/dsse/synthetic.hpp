#pragma once

#include "dsse/corpus.hpp"

#include <cstdint>
#include <filesystem>

namespace dsse {

struct SyntheticSpec
{
    std::size_t n = 1000;        // documents
    std::size_t z = 2000;        // vocabulary size (ranks 1..z)
    std::size_t groups = 1;      // G1..Gp, assigned uniformly
    std::uint64_t seed = 1;
    std::size_t min_words = 20;  // word draws per document
    std::size_t max_words = 60;
};

/// Rank-r word is "w<r>". Each document draws its words independently from
/// p(r) = 1 / (r * H(z)). Byte-identical output for equal specs.
Corpus zipf_corpus(const SyntheticSpec& spec);

/// `dir/docs/<name>` per document plus `dir/groups.tsv`.
void write_corpus_directory(const Corpus& corpus, const std::filesystem::path& dir);

/// Documents with exactly `keywords` distinct keywords, named `<prefix><i>`.
std::vector<Document> documents_with_keywords(std::size_t count, std::size_t keywords, const std::string& prefix,
                                              std::uint64_t seed, std::size_t vocabulary = 100000);

} // namespace dsse
