#include "fixtures.hpp"

#include <dsse/errors.hpp>
#include <dsse/system.hpp>
#include <dsse/update_engine.hpp>

#include <gtest/gtest.h>

using namespace dsse;
using namespace dsse::testing;

namespace {

Bytes cell_bytes(const Tag& tag, std::uint32_t block, std::uint32_t slot)
{
    Bytes out(tag.bytes.begin(), tag.bytes.end());
    for (int s = 24; s >= 0; s -= 8)
        out.push_back(static_cast<std::uint8_t>(block >> s));
    for (int s = 24; s >= 0; s -= 8)
        out.push_back(static_cast<std::uint8_t>(slot >> s));
    return out;
}

struct Deployment
{
    Example41 ex = example41();
    KeyRing keys = keygen(ex.corpus.groups, 11);
    Owner owner{test_config(2), keys};
    std::unique_ptr<CloudServer> server;

    Deployment() { server = std::make_unique<CloudServer>(owner.setup_with_payloads(ex.corpus, ex.payloads, ex.storage)); }

    std::vector<DocId> search(const std::string& w) { return server->search(owner.trapdoor(w)).ids; }

    void remove(const std::string& name)
    {
        server->remove(owner.deletion_token(name));
        owner.forget_document(name);
    }

    std::vector<DocId> add(std::vector<Document> docs)
    {
        const auto req = owner.begin_addition(docs);
        const auto resp = server->serve_addition(req);
        const auto commit = owner.finish_addition(resp);
        server->commit_addition(commit);
        owner.confirm_addition();
        std::vector<DocId> ids;
        for (const auto& d : commit.documents)
            ids.push_back(d.id);
        return ids;
    }
};

Document doc(const std::string& name, const std::string& body)
{
    Document d;
    d.name = name;
    d.body = body;
    return d;
}

} // namespace

TEST(Xi, CeilDivision)
{
    EXPECT_EQ(xi(0, 6), 0u);
    EXPECT_EQ(xi(1, 6), 1u);
    EXPECT_EQ(xi(6, 6), 1u);
    EXPECT_EQ(xi(7, 6), 2u);
    EXPECT_THROW(xi(5, 0), DomainError);
}

TEST(Xi, PaddingCoversRealCells)
{
    for (std::size_t len = 0; len < 60; ++len)
        for (std::size_t cells = 0; cells < 12; ++cells) {
            const auto p = padded_length(len, cells, 6);
            EXPECT_GE(p, len);
            EXPECT_GE(xi(p, 6), cells);
            if (xi(len, 6) >= cells)
                EXPECT_EQ(p, len);
            else
                EXPECT_EQ(xi(p - 1, 6), cells - 1); // minimal
        }
}

TEST(AddressCell, WireFormat)
{
    const auto keys = keygen({}, 1);
    const AddressCell c{prf_tag(keys.tag, "w"), 3, 9};
    const auto b = c.encode();
    EXPECT_EQ(b, cell_bytes(c.tag, 3, 9));
    EXPECT_EQ(AddressCell::decode(b), c);
    EXPECT_THROW(AddressCell::decode(ByteView(b).first(39)), DecodeError);
    const auto fake = AddressCell::make_fake(keys.tag);
    EXPECT_TRUE(fake.fake());
    EXPECT_FALSE(c.fake());
}

TEST(WorkedExample, AddressListsByteForByte)
{
    const auto ex = example41();
    const auto keys = keygen(ex.corpus.groups, 1);
    const auto placement = placements_from_payloads(ex.payloads, BlockGeometry::from(ex.storage));
    const auto t1 = prf_tag(keys.tag, "w1"), t2 = prf_tag(keys.tag, "w2"), t3 = prf_tag(keys.tag, "w3");

    auto encoded = [&](DocId id, std::set<std::string> kws) {
        std::vector<Bytes> out;
        for (const auto& c : document_cells(id, kws, placement, keys.tag))
            out.push_back(c.encode());
        return out;
    };
    EXPECT_EQ(encoded(2, {"w1", "w2"}), (std::vector<Bytes>{cell_bytes(t1, 1, 2), cell_bytes(t2, 2, 1)}));
    EXPECT_EQ(encoded(56, {"w2"}), (std::vector<Bytes>{cell_bytes(t2, 1, 8)}));
    EXPECT_EQ(encoded(300, {"w1", "w3"}), (std::vector<Bytes>{cell_bytes(t1, 2, 44), cell_bytes(t3, 2, 5)}));
    EXPECT_THROW(document_cells(56, {"w1"}, placement, keys.tag), DomainError);
}

TEST(WorkedExample, UpdateIndexRecoversAddresses)
{
    Deployment d;
    const auto& rows = d.server->update_index();
    const auto token = d.owner.deletion_token("D300");
    const auto& row = rows.at(token.doc_tag);
    EXPECT_EQ(row.id, 300u);
    const auto cells = extract_addresses(token, row.entry, d.server->deletion_oracle());
    const auto t1 = prf_tag(d.keys.tag, "w1"), t3 = prf_tag(d.keys.tag, "w3");
    EXPECT_EQ(cells, (std::vector<AddressCell>{{t1, 2, 44}, {t3, 2, 5}}));
    // Empty documents still get an update-index row, sized by their ciphertext.
    const auto& empty = rows.at(d.owner.deletion_token("D1").doc_tag);
    EXPECT_EQ(empty.entry.cells.size(), xi(d.server->documents().at(1).ciphertext.size() - kDocumentHeaderBytes, 6));
}

TEST(WorkedExample, DeleteThenSearch)
{
    Deployment d;
    d.remove("D2");
    EXPECT_EQ(d.search("w1"), (std::vector<DocId>{300}));
    EXPECT_EQ(d.search("w2"), (std::vector<DocId>{56}));
    EXPECT_EQ(d.search("w3"), (std::vector<DocId>{300}));
    EXPECT_EQ(d.server->documents().count(2), 0u);

    // The list slot is signalled and recorded as free; the bit-vector bit is cleared.
    const auto t2 = prf_tag(d.keys.tag, "w2");
    const auto blk = d.server->store().gather(t2).at(2);
    EXPECT_TRUE(blk.slot_invalid(1));
    EXPECT_EQ(blk.invalid_count(), 1u);
    EXPECT_EQ(d.server->helper().at(t2).level_of(2), 1u);

    d.remove("D56");
    EXPECT_TRUE(d.search("w2").empty());
    EXPECT_THROW(d.server->remove(d.owner.deletion_token("D56")), NotFound);
}

TEST(Deletion, InvalidCellAbortsWithoutMutation)
{
    Deployment d;
    HelperIndex helper;
    const auto before = d.server->snapshot_bytes();
    const auto t2 = prf_tag(d.keys.tag, "w2");
    const std::vector<AddressCell> cells{{t2, 1, 8}, {t2, 9, 1}};
    EXPECT_THROW(apply_deletion(cells, d.server->store(), helper, 8), ProtocolError);
    EXPECT_EQ(d.server->snapshot_bytes(), before);
    EXPECT_TRUE(helper.empty());
    const std::vector<AddressCell> slot_oob{{t2, 1, 9}};
    EXPECT_THROW(apply_deletion(slot_oob, d.server->store(), helper, 8), ProtocolError);
}

TEST(Addition, NewDocumentsAreFoundAndReuseFreedSlots)
{
    Deployment d;
    d.remove("D2"); // frees w2 block 2 slot 1
    const auto t2 = prf_tag(d.keys.tag, "w2");
    const auto ids = d.add({doc("N1", "w2 w4"), doc("N2", "w1 w4")});
    EXPECT_EQ(ids, (std::vector<DocId>{513, 514}));
    EXPECT_EQ(d.search("w2"), (std::vector<DocId>{56, 513}));
    EXPECT_EQ(d.search("w1"), (std::vector<DocId>{300, 514}));
    EXPECT_EQ(d.search("w4"), (std::vector<DocId>{513, 514}));
    // The freed slot was refilled, so w2 gained no fresh block.
    EXPECT_EQ(d.server->store().gather(t2).size(), 2u);
    EXPECT_EQ(d.server->helper().at(t2).free_slots(), 0u);

    // Deleting an added document works through its update-index row.
    d.remove("N1");
    EXPECT_EQ(d.search("w2"), (std::vector<DocId>{56}));
    EXPECT_EQ(d.search("w4"), (std::vector<DocId>{514}));
}

TEST(Addition, FreshBlockCount)
{
    Deployment d;
    std::vector<Document> docs;
    for (int i = 0; i < 19; ++i)
        docs.push_back(doc("M" + std::to_string(i), "w5"));
    const auto req = d.owner.begin_addition(docs);
    const auto resp = d.server->serve_addition(req);
    const auto commit = d.owner.finish_addition(resp);
    ASSERT_EQ(commit.updates.size(), 1u);
    std::size_t fresh = 0;
    for (const auto& b : commit.updates[0].blocks)
        fresh += b.fresh;
    EXPECT_EQ(fresh, 3u); // ceil(19 / 8)
    d.server->commit_addition(commit);
    d.owner.confirm_addition();
    EXPECT_EQ(d.search("w5").size(), 19u);
}

TEST(Addition, AbortReleasesReservations)
{
    Deployment d;
    d.remove("D2");
    const auto t2 = prf_tag(d.keys.tag, "w2");
    const auto req = d.owner.begin_addition({doc("N1", "w2")});
    const auto resp = d.server->serve_addition(req);
    EXPECT_EQ(d.server->helper().at(t2).free_slots(), 0u);
    d.server->abandon_addition(resp);
    d.owner.abort_addition();
    EXPECT_EQ(d.server->helper().at(t2).level_of(2), 1u);
    EXPECT_EQ(d.add({doc("N1", "w2")}), (std::vector<DocId>{513}));
    EXPECT_EQ(d.search("w2"), (std::vector<DocId>{56, 513}));
}

TEST(Addition, StaleReservationIsRejected)
{
    Deployment d;
    d.remove("D2");
    const auto req = d.owner.begin_addition({doc("N1", "w2")});
    const auto resp = d.server->serve_addition(req);
    auto commit = d.owner.finish_addition(resp);
    ASSERT_FALSE(commit.updates.empty());
    commit.updates[0].blocks[0].column = 77;
    EXPECT_THROW(d.server->commit_addition(commit), ProtocolError);
}

TEST(Addition, RejectsDuplicateNames)
{
    Deployment d;
    EXPECT_THROW(d.owner.begin_addition({doc("D5", "w1")}), DomainError);
}

TEST(Dynamic, RandomOperationsMatchBruteForce)
{
    std::mt19937_64 rng(41);
    for (int round = 0; round < 3; ++round) {
        const auto corpus = random_corpus(rng, 60, 25, 1, 10);
        Owner owner(test_config(1 + round), keygen(corpus.groups, round));
        CloudServer server(owner.setup(corpus));
        std::map<std::string, std::string> live;
        for (const auto& dd : corpus.documents)
            live[dd.name] = dd.body;
        std::map<std::string, DocId> ids;
        for (const auto& dd : corpus.documents)
            ids[dd.name] = dd.id;
        int fresh = 0;
        for (int op = 0; op < 40; ++op) {
            const auto r = rng() % 3;
            if (r == 0 && !live.empty()) {
                auto it = std::next(live.begin(), static_cast<long>(rng() % live.size()));
                server.remove(owner.deletion_token(it->first));
                owner.forget_document(it->first);
                live.erase(it);
            } else if (r == 1) {
                std::vector<Document> docs;
                for (std::size_t k = 0; k <= rng() % 3; ++k) {
                    std::string body;
                    for (int w = 0; w < 4; ++w)
                        body += "t" + std::to_string(rng() % 30) + " ";
                    docs.push_back(doc("x" + std::to_string(fresh++), body));
                }
                const auto req = owner.begin_addition(docs);
                const auto commit = owner.finish_addition(server.serve_addition(req));
                server.commit_addition(commit);
                owner.confirm_addition();
                for (std::size_t k = 0; k < docs.size(); ++k) {
                    live[docs[k].name] = docs[k].body;
                    ids[docs[k].name] = commit.documents[k].id;
                }
            } else {
                const std::string w = "t" + std::to_string(rng() % 30);
                std::vector<DocId> expect;
                for (const auto& [name, body] : live)
                    if (naive_tokens(body).count(w))
                        expect.push_back(ids[name]);
                std::sort(expect.begin(), expect.end());
                ASSERT_EQ(server.search(owner.trapdoor(w)).ids, expect) << "round " << round << " op " << op;
            }
        }
    }
}
