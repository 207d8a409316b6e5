#include "fixtures.hpp"

#include <dsse/errors.hpp>
#include <dsse/search_engine.hpp>
#include <dsse/system.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace dsse;
using namespace dsse::testing;

namespace {

std::vector<DocId> restricted(const std::vector<DocId>& ids, const Corpus& c, const std::vector<GroupId>& groups)
{
    std::vector<DocId> out;
    for (auto id : ids)
        if (std::find(groups.begin(), groups.end(), c.find(id)->group) != groups.end())
            out.push_back(id);
    return out;
}

} // namespace

TEST(Trapdoor, Components)
{
    const auto keys = keygen({"G1", "G2"}, 3);
    const auto td = make_trapdoor("apple", keys);
    EXPECT_EQ(td.tag, prf_tag(keys.tag, "apple"));
    EXPECT_EQ(td.key, derive_oracle_key(keys.payload, "apple"));
    const auto at = make_auth_trapdoor("apple", keys, {"G2", "G1"});
    ASSERT_EQ(at.components.size(), 2u);
    EXPECT_FALSE(at.owner);
    for (const auto& c : at.components)
        EXPECT_EQ(c.key, derive_oracle_key(keys.group(c.group).index, "apple"));
    const auto ot = make_auth_trapdoor("apple", keys, {}, true);
    ASSERT_EQ(ot.components.size(), 1u);
    EXPECT_TRUE(ot.owner);
    EXPECT_EQ(ot.components[0].key, derive_oracle_key(keys.owner, "apple"));
}

TEST(MergeResults, UnionAndDuplicateRegion)
{
    PartialResult a{1, {1, 5}, {}}, b{2, {3, 5}, {}};
    EXPECT_EQ(merge_results({a, b}), (std::vector<DocId>{1, 3, 5}));
    EXPECT_THROW(merge_results({a, a}), ProtocolError);
}

TEST(Search, WorkedExample)
{
    const auto ex = example41();
    for (unsigned m : {1u, 2u, 3u}) {
        Owner owner(test_config(m), keygen(ex.corpus.groups, 1));
        CloudServer server(owner.setup_with_payloads(ex.corpus, ex.payloads, ex.storage));
        EXPECT_EQ(server.search(owner.trapdoor("w1")).ids, (std::vector<DocId>{2, 300}));
        EXPECT_EQ(server.search(owner.trapdoor("w2")).ids, (std::vector<DocId>{2, 56}));
        EXPECT_EQ(server.search(owner.trapdoor("w3")).ids, (std::vector<DocId>{300}));
        EXPECT_TRUE(server.search(owner.trapdoor("w9")).ids.empty());
    }
}

TEST(Search, MatchesPlainIndexOnRandomCorpora)
{
    std::mt19937_64 rng(17);
    for (int round = 0; round < 6; ++round) {
        const auto corpus = random_corpus(rng, 40 + rng() % 200, 30 + rng() % 100, 1, 20);
        const auto plain = naive_index(corpus);
        for (unsigned m : {1u, 2u, 3u, 5u}) {
            Owner owner(test_config(m, false, round), keygen(corpus.groups, round));
            CloudServer server(owner.setup(corpus));
            for (const auto& [w, ids] : plain)
                ASSERT_EQ(server.search(owner.trapdoor(w)).ids, ids) << w << " m=" << m;
        }
    }
}

TEST(Search, ReturnedDocumentsDecrypt)
{
    std::mt19937_64 rng(3);
    const auto corpus = random_corpus(rng, 60, 20, 1);
    const auto keys = keygen(corpus.groups, 5);
    Owner owner(test_config(2), keys);
    CloudServer server(owner.setup(corpus));
    User user(user_keyring(keys, {"G1"}, false), {"G1"}, false);
    const auto resp = server.search(user.trapdoor("t1"));
    const auto plain = user.decrypt(resp);
    ASSERT_EQ(plain.size(), resp.ids.size());
    for (const auto& [id, body] : plain)
        EXPECT_EQ(body.substr(0, corpus.find(id)->body.size()), corpus.find(id)->body);
}

TEST(AuthSearch, UsersSeeOnlyTheirGroups)
{
    std::mt19937_64 rng(23);
    for (int round = 0; round < 4; ++round) {
        const std::size_t p = 2 + rng() % 4;
        const auto corpus = random_corpus(rng, 80 + rng() % 150, 40, p, 15);
        const auto plain = naive_index(corpus);
        const auto keys = keygen(corpus.groups, round);
        Owner owner(test_config(1 + round % 3, true, round), keys);
        CloudServer server(owner.setup(corpus));

        std::vector<GroupId> all(corpus.groups.begin(), corpus.groups.end());
        std::vector<GroupId> mine(all.begin(), all.begin() + 1 + static_cast<long>(rng() % p));
        User user(user_keyring(keys, mine, true), mine, true);
        for (const auto& [w, ids] : plain) {
            EXPECT_EQ(server.search(user.auth_trapdoor(w)).ids, restricted(ids, corpus, mine)) << w;
            EXPECT_EQ(server.search(owner.owner_trapdoor(w)).ids, ids) << w;
        }
    }
}

TEST(AuthSearch, UserDecryptsOwnGroupDocuments)
{
    std::mt19937_64 rng(29);
    const auto corpus = random_corpus(rng, 100, 20, 3, 10);
    const auto keys = keygen(corpus.groups, 2);
    Owner owner(test_config(2, true), keys);
    CloudServer server(owner.setup(corpus));
    User user(user_keyring(keys, {"G2"}, true), {"G2"}, true);
    const auto resp = server.search(user.auth_trapdoor("t1"));
    const auto plain = user.decrypt(resp);
    for (const auto& [id, body] : plain)
        EXPECT_EQ(corpus.find(id)->group, "G2");
    // The restricted keyring cannot decrypt another group's documents.
    const auto full = server.search(owner.owner_trapdoor("t1"));
    bool foreign = false;
    for (const auto& d : full.documents)
        foreign |= corpus.find(d.id)->group != "G2";
    if (foreign)
        EXPECT_ANY_THROW(user.decrypt(full));
}

TEST(Search, RegionFailureFailsWholeQuery)
{
    std::mt19937_64 rng(31);
    const auto corpus = random_corpus(rng, 50, 10);
    Owner owner(test_config(3), keygen(corpus.groups, 1));
    ServerOptions opts;
    opts.latency_us = 10;
    CloudServer server(owner.setup(corpus), opts);
    ASSERT_NE(server.loopback(), nullptr);
    server.loopback()->fail_region(2);
    EXPECT_THROW(server.search(owner.trapdoor("t1")), TransportError);
    server.loopback()->fail_region(2, false);
    EXPECT_EQ(server.search(owner.trapdoor("t1")).ids, naive_index(corpus)["t1"]);
}

TEST(Search, HitsReportLocations)
{
    const auto ex = example41();
    Owner owner(test_config(2), keygen(ex.corpus.groups, 1));
    const auto setup = owner.setup_with_payloads(ex.corpus, ex.payloads, ex.storage);
    CloudServer server(setup);
    RegionSearchOptions opt;
    opt.n_setup = 512;
    opt.n_total = 512;
    opt.collect_hits = true;
    const auto out = search_regions(server.transport(), server.store(), owner.trapdoor("w2"), server.search_oracle(), opt);
    ASSERT_EQ(out.hits.size(), 2u);
    EXPECT_EQ(out.hits[0].id, 2u);
    EXPECT_EQ(out.hits[0].column, 2u);
    EXPECT_EQ(out.hits[0].slot, 1u);
    EXPECT_EQ(out.hits[1].id, 56u);
    EXPECT_EQ(out.hits[1].column, 1u);
    EXPECT_EQ(out.hits[1].slot, 8u);
    EXPECT_TRUE(out.indexed);
}
