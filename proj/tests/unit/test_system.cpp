#include "fixtures.hpp"

#include <dsse/config.hpp>
#include <dsse/errors.hpp>
#include <dsse/protocol.hpp>
#include <dsse/records.hpp>
#include <dsse/synthetic.hpp>
#include <dsse/system.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace dsse;
using namespace dsse::testing;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("dsse_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST(Config, ParseAndSerialize)
{
    const auto c = EngineConfig::parse("m = 3\nid_bits = 32\nkappa = 256\n# comment\nupsilon = 6\n"
                                       "avg_w_bytes = 7\nseed = 42\nauth = true\nlatency_us = 200\nthreads = 2\n");
    EXPECT_EQ(c.m, 3u);
    EXPECT_EQ(c.upsilon_override, 6u);
    EXPECT_EQ(c.avg_w, 7u);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_TRUE(c.auth);
    EXPECT_EQ(c.latency_us, 200u);
    EXPECT_EQ(c.threads, 2u);
    EXPECT_EQ(EngineConfig::parse(c.serialize()), c);
}

TEST(Config, RejectsBadInput)
{
    EXPECT_THROW(EngineConfig::parse("colour = red\n"), ConfigError);
    EXPECT_THROW(EngineConfig::parse("m = 0\n"), ConfigError);
    EXPECT_THROW(EngineConfig::parse("m = x\n"), ConfigError);
    EXPECT_THROW(EngineConfig::parse("kappa = 128\n"), ConfigError);
    EXPECT_THROW(EngineConfig::parse("id_bits = 24\n"), ConfigError);
    EXPECT_THROW(EngineConfig::parse("auth = maybe\n"), ConfigError);
    EXPECT_THROW(EngineConfig::parse("m 3\n"), ConfigError);
}

TEST(Records, SectionsRoundTrip)
{
    RecordWriter w;
    w.section("ABCD", {{field("x"), field_u64(7)}, {}});
    w.section("EFGH", {});
    RecordReader r(w.bytes());
    const auto recs = r.section("ABCD");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(as_string(recs[0][0]), "x");
    EXPECT_EQ(as_u64(recs[0][1]), 7u);
    EXPECT_THROW(r.section("ZZZZ"), DecodeError);
    RecordReader r2(w.bytes());
    r2.section("ABCD");
    EXPECT_TRUE(r2.section("EFGH").empty());
    EXPECT_TRUE(r2.done());
    auto cut = w.bytes();
    cut.resize(cut.size() - 3);
    RecordReader r3(cut);
    r3.section("ABCD");
    EXPECT_THROW(r3.section("EFGH"), DecodeError);
}

TEST(Protocol, TokensRoundTrip)
{
    const auto keys = keygen({"G1", "G2"}, 1);
    const auto td = make_trapdoor("kw", keys);
    EXPECT_EQ(decode_trapdoor(encode(td)), td);
    const auto at = make_auth_trapdoor("kw", keys, {"G1", "G2"});
    EXPECT_EQ(decode_auth_trapdoor(encode(at)), at);
    const auto ot = make_auth_trapdoor("kw", keys, {}, true);
    EXPECT_EQ(decode_auth_trapdoor(encode(ot)), ot);
    const auto dt = make_deletion_token("doc", keys);
    EXPECT_EQ(decode_deletion_token(encode(dt)), dt);
    AdditionRequest req;
    req.items = {{td.tag, 3}, {prf_tag(keys.tag, "other"), 1}};
    EXPECT_EQ(decode_addition_request(encode(req)), req);

    EXPECT_THROW(decode_trapdoor(encode(dt)), DecodeError);
    auto extra = encode(td);
    extra.push_back(0);
    EXPECT_THROW(decode_trapdoor(extra), DecodeError);
    EXPECT_THROW(decode_addition_request(Bytes{1, 2, 3}), DecodeError);
}

TEST(Protocol, AdditionExchangeRoundTrip)
{
    const auto ex = example41();
    const auto keys = keygen(ex.corpus.groups, 2);
    Owner owner(test_config(2), keys);
    CloudServer server(owner.setup_with_payloads(ex.corpus, ex.payloads, ex.storage));
    server.remove(owner.deletion_token("D2"));
    owner.forget_document("D2");

    Document d;
    d.name = "N1";
    d.body = "w2 w7";
    const auto req = decode_addition_request(encode(owner.begin_addition({d})));
    const auto resp = server.serve_addition(req);
    const auto resp2 = decode_addition_response(encode(resp, 8));
    ASSERT_EQ(resp2.items.size(), resp.items.size());
    for (std::size_t i = 0; i < resp.items.size(); ++i)
        EXPECT_EQ(resp2.items[i], resp.items[i]);
    const auto commit = owner.finish_addition(resp2);
    const auto commit2 = decode_addition_commit(encode(commit, 8));
    EXPECT_EQ(commit2.updates, commit.updates);
    EXPECT_EQ(commit2.update_rows, commit.update_rows);
    EXPECT_EQ(commit2.documents, commit.documents);
    server.commit_addition(commit2);
    owner.confirm_addition();
    EXPECT_EQ(server.search(owner.trapdoor("w7")).ids, (std::vector<DocId>{513}));
}

TEST(Snapshot, ServerRoundTripPreservesBehaviour)
{
    std::mt19937_64 rng(8);
    for (bool auth : {false, true}) {
        const auto corpus = random_corpus(rng, 80, 30, 2, 10);
        Owner owner(test_config(3, auth), keygen(corpus.groups, 3));
        CloudServer server(owner.setup(corpus));
        server.remove(owner.deletion_token("doc5"));
        owner.forget_document("doc5");

        const auto bytes = server.snapshot_bytes();
        auto copy = CloudServer::from_snapshot(bytes);
        EXPECT_EQ(copy->snapshot_bytes(), bytes);
        EXPECT_EQ(copy->params(), server.params());
        EXPECT_EQ(copy->helper(), server.helper());
        EXPECT_EQ(copy->groups(), server.groups());
        for (const auto& [w, ids] : naive_index(corpus)) {
            if (auth)
                EXPECT_EQ(copy->search(owner.owner_trapdoor(w)).ids, server.search(owner.owner_trapdoor(w)).ids);
            else
                EXPECT_EQ(copy->search(owner.trapdoor(w)).ids, server.search(owner.trapdoor(w)).ids);
        }
        auto bad = bytes;
        bad.resize(bad.size() / 2);
        EXPECT_THROW(CloudServer::from_snapshot(bad), DecodeError);
    }
}

TEST(Snapshot, FileAndOwnerStateRoundTrip)
{
    const auto dir = scratch("snap");
    std::mt19937_64 rng(9);
    const auto corpus = random_corpus(rng, 40, 15);
    const auto keys = keygen(corpus.groups, 4);
    const auto config = test_config(2);
    auto owner = std::make_unique<Owner>(config, keys);
    CloudServer server(owner->setup(corpus));
    server.save(dir / "server.bin");
    owner->save_state(dir / "owner.json");

    auto server2 = CloudServer::load(dir / "server.bin");
    auto owner2 = Owner::load_state(dir / "owner.json", config, keys);
    EXPECT_EQ(owner2->params(), owner->params());
    EXPECT_EQ(owner2->placement(), owner->placement());
    EXPECT_EQ(owner2->names(), owner->names());

    // The restored owner can continue the protocol.
    server2->remove(owner2->deletion_token("doc1"));
    owner2->forget_document("doc1");
    Document d;
    d.name = "late";
    d.body = "t1 t2";
    const auto commit = owner2->finish_addition(server2->serve_addition(owner2->begin_addition({d})));
    server2->commit_addition(commit);
    owner2->confirm_addition();
    const auto hits = server2->search(owner2->trapdoor("t1")).ids;
    EXPECT_TRUE(std::find(hits.begin(), hits.end(), DocId{41}) != hits.end());
    EXPECT_THROW(CloudServer::load(dir / "missing.bin"), NotFound);
    std::filesystem::remove_all(dir);
}

TEST(Keys, FileRoundTrip)
{
    const auto dir = scratch("keys");
    const auto keys = keygen({"G1", "G7"});
    keys.save(dir / "k.txt");
    EXPECT_EQ(KeyRing::load(dir / "k.txt"), keys);
    EXPECT_THROW(KeyRing::parse("K_t = 00\n"), DecodeError);
    std::filesystem::remove_all(dir);
}

TEST(Synthetic, DeterministicZipfCorpus)
{
    SyntheticSpec spec;
    spec.n = 200;
    spec.z = 500;
    spec.groups = 3;
    const auto a = zipf_corpus(spec);
    const auto b = zipf_corpus(spec);
    ASSERT_EQ(a.n(), 200u);
    for (std::size_t i = 0; i < a.n(); ++i)
        EXPECT_EQ(a.documents[i].body, b.documents[i].body);
    EXPECT_NO_THROW(a.validate());
    // Rank 1 is the most frequent keyword.
    const auto idx = build_inverted_index(a);
    std::size_t best = 0;
    std::string top;
    for (const auto& [w, ids] : idx.entries)
        if (ids.size() > best) {
            best = ids.size();
            top = w;
        }
    EXPECT_EQ(top, "w1");

    const auto docs = documents_with_keywords(3, 50, "k", 1);
    for (const auto& d : docs)
        EXPECT_EQ(extract_keywords(d.body).size(), 50u);
}

TEST(Setup, DerivedUpsilonAndOverride)
{
    std::mt19937_64 rng(10);
    const auto corpus = random_corpus(rng, 100, 40);
    Owner a(test_config(1), keygen(corpus.groups, 1));
    const auto pkg = a.setup(corpus);
    EXPECT_EQ(pkg.params.upsilon, optimal_upsilon(100, build_inverted_index(corpus).z(), 32));
    auto cfg = test_config(1);
    cfg.upsilon_override = 3;
    Owner b(cfg, keygen(corpus.groups, 1));
    EXPECT_EQ(b.setup(corpus).params.upsilon, 3u);
}
