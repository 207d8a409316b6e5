#include "dsse/synthetic.hpp"

#include "dsse/errors.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <vector>

namespace dsse {

namespace {

// Portable draws: std distributions differ between standard libraries.
double unit(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t below(std::mt19937_64& rng, std::size_t k)
{
    return static_cast<std::size_t>(rng() % k);
}

} // namespace

Corpus zipf_corpus(const SyntheticSpec& spec)
{
    if (spec.z == 0 || spec.groups == 0 || spec.min_words == 0 || spec.max_words < spec.min_words)
        throw DomainError("bad synthetic corpus spec");
    std::mt19937_64 rng(spec.seed);
    std::vector<double> cdf(spec.z);
    double acc = 0;
    for (std::size_t r = 0; r < spec.z; ++r)
        cdf[r] = (acc += 1.0 / static_cast<double>(r + 1));

    Corpus c;
    for (std::size_t g = 1; g <= spec.groups; ++g)
        c.groups.insert("G" + std::to_string(g));
    c.documents.reserve(spec.n);
    for (std::size_t i = 1; i <= spec.n; ++i) {
        Document d;
        d.id = i;
        d.name = "doc" + std::to_string(i) + ".txt";
        d.group = "G" + std::to_string(below(rng, spec.groups) + 1);
        const std::size_t k = spec.min_words + below(rng, spec.max_words - spec.min_words + 1);
        for (std::size_t j = 0; j < k; ++j) {
            const double u = unit(rng) * acc;
            auto r = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            r = std::min(r, spec.z - 1);
            if (j)
                d.body += ' ';
            d.body += "w" + std::to_string(r + 1);
        }
        c.documents.push_back(std::move(d));
    }
    return c;
}

void write_corpus_directory(const Corpus& corpus, const std::filesystem::path& dir)
{
    const auto docs = dir / "docs";
    std::filesystem::create_directories(docs);
    std::ofstream groups(dir / "groups.tsv", std::ios::trunc);
    if (!groups)
        throw Error("cannot write " + (dir / "groups.tsv").string());
    for (const auto& d : corpus.documents) {
        std::ofstream f(docs / d.name, std::ios::binary | std::ios::trunc);
        if (!f)
            throw Error("cannot write " + (docs / d.name).string());
        f << d.body;
        groups << d.name << '\t' << d.group << '\n';
    }
}

std::vector<Document> documents_with_keywords(std::size_t count, std::size_t keywords, const std::string& prefix,
                                              std::uint64_t seed, std::size_t vocabulary)
{
    if (keywords > vocabulary)
        throw DomainError("more keywords than vocabulary");
    std::mt19937_64 rng(seed);
    std::vector<Document> out;
    for (std::size_t i = 1; i <= count; ++i) {
        std::set<std::size_t> picked;
        while (picked.size() < keywords)
            picked.insert(below(rng, vocabulary) + 1);
        Document d;
        d.name = prefix + std::to_string(i);
        for (auto w : picked) {
            if (!d.body.empty())
                d.body += ' ';
            d.body += "w" + std::to_string(w);
        }
        out.push_back(std::move(d));
    }
    return out;
}

} // namespace dsse
