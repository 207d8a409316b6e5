#include "fixtures.hpp"

#include <algorithm>

namespace dsse::testing {

Example41 example41()
{
    Example41 ex;
    ex.corpus.groups = {kDefaultGroup};
    for (DocId i = 1; i <= 512; ++i) {
        Document d;
        d.id = i;
        d.name = "D" + std::to_string(i);
        if (i == 2)
            d.body = "w1 w2";
        else if (i == 56)
            d.body = "w2";
        else if (i == 300)
            d.body = "w1 w3";
        ex.corpus.documents.push_back(std::move(d));
    }
    ex.storage = StorageParams{512, 3, 32, 16};

    PlainPayload w1;
    w1.kind = PayloadKind::BitVector;
    w1.bits = BitVector(512);
    w1.bits.set(2);
    w1.bits.set(300);

    PlainPayload w2;
    w2.kind = PayloadKind::List;
    w2.ids.assign(16, 0);
    w2.ids[7] = 56; // block 1, slot 8
    w2.ids[8] = 2;  // block 2, slot 1

    PlainPayload w3;
    w3.kind = PayloadKind::List;
    w3.ids.assign(16, 0);
    w3.ids[12] = 300; // block 2, slot 5

    ex.payloads = {{"w1", w1}, {"w2", w2}, {"w3", w3}};
    return ex;
}

Corpus random_corpus(std::mt19937_64& rng, std::size_t n, std::size_t vocab, std::size_t groups, std::size_t max_words)
{
    Corpus c;
    for (std::size_t g = 1; g <= groups; ++g)
        c.groups.insert("G" + std::to_string(g));
    for (std::size_t i = 1; i <= n; ++i) {
        Document d;
        d.id = i;
        d.name = "doc" + std::to_string(i);
        d.group = "G" + std::to_string(rng() % groups + 1);
        const std::size_t k = rng() % (max_words + 1);
        for (std::size_t j = 0; j < k; ++j) {
            // Skewed draw so some keywords are frequent enough to become bit vectors.
            const std::size_t r = (rng() % vocab) * (rng() % vocab) / vocab;
            d.body += (j ? " " : "") + std::string("t") + std::to_string(r);
        }
        c.documents.push_back(std::move(d));
    }
    return c;
}

std::set<std::string> naive_tokens(const std::string& body)
{
    std::set<std::string> out;
    std::string cur;
    for (char ch : body + " ") {
        char c = ch;
        if (c >= 'A' && c <= 'Z')
            c = static_cast<char>(c - 'A' + 'a');
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            cur += c;
            continue;
        }
        if (cur.size() >= 2)
            out.insert(cur);
        cur.clear();
    }
    return out;
}

std::map<std::string, std::vector<DocId>> naive_index(const Corpus& corpus)
{
    std::map<std::string, std::vector<DocId>> out;
    for (const auto& d : corpus.documents)
        for (const auto& w : naive_tokens(d.body))
            out[w].push_back(d.id);
    for (auto& [w, ids] : out)
        std::sort(ids.begin(), ids.end());
    return out;
}

EngineConfig test_config(unsigned m, bool auth, std::uint64_t seed)
{
    EngineConfig c;
    c.m = m;
    c.auth = auth;
    c.seed = seed;
    return c;
}

} // namespace dsse::testing
