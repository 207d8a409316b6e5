#include "fixtures.hpp"

#include <dsse/errors.hpp>
#include <dsse/secure_index.hpp>

#include <gtest/gtest.h>

using namespace dsse;
using namespace dsse::testing;

namespace {

Block oracle_block(const RandomOracle& os, const OracleKey& key, std::uint64_t j)
{
    return to_block(os.query(key, j));
}

} // namespace

TEST(Geometry, BlockCounts)
{
    const BlockGeometry g{32, 512, 16};
    EXPECT_EQ(g.cp(), 8u);
    EXPECT_EQ(g.ell(), 2u);
    EXPECT_EQ(g.iota(), 2u);
    EXPECT_EQ((BlockGeometry{32, 257, 17}.ell()), 2u);
    EXPECT_EQ((BlockGeometry{32, 257, 17}.iota()), 3u);
    EXPECT_EQ((BlockGeometry{16, 1, 1}.cp()), 16u);
    EXPECT_EQ((BlockGeometry{64, 1, 5}.iota()), 2u);
}

TEST(Blocks, SplitJoinRoundTrip)
{
    std::mt19937_64 rng(1);
    for (unsigned bits : {16u, 32u, 64u}) {
        const StorageParams p{700, 50, bits, 13};
        const auto geom = BlockGeometry::from(p);
        std::vector<DocId> few{3, 99, 700};
        const auto list = build_payload(few, p, rng);
        EXPECT_EQ(join_blocks(PayloadKind::List, split_blocks(list, geom), geom), list);
        std::vector<DocId> many;
        for (DocId i = 1; i <= 700; i += 3)
            many.push_back(i);
        const auto bv = build_payload(many, p, rng);
        const auto blocks = split_blocks(bv, geom);
        EXPECT_EQ(blocks.size(), geom.ell());
        EXPECT_EQ(join_blocks(PayloadKind::BitVector, blocks, geom), bv);
    }
}

TEST(Blocks, WorkedExamplePlacements)
{
    const auto ex = example41();
    const auto geom = BlockGeometry::from(ex.storage);
    using P = std::vector<std::pair<DocId, Location>>;
    EXPECT_EQ(payload_placements(ex.payloads.at("w1"), geom), (P{{2, {1, 2}}, {300, {2, 44}}}));
    EXPECT_EQ(payload_placements(ex.payloads.at("w2"), geom), (P{{56, {1, 8}}, {2, {2, 1}}}));
    EXPECT_EQ(payload_placements(ex.payloads.at("w3"), geom), (P{{300, {2, 5}}}));
}

TEST(Blocks, BitvecBlockIds)
{
    Block b{};
    set_bit(b, 1, true);
    set_bit(b, 44, true);
    set_bit(b, 256, true);
    EXPECT_EQ(bitvec_block_ids(b, 2, 1000), (std::vector<DocId>{257, 300, 512}));
    EXPECT_EQ(bitvec_block_ids(b, 2, 400), (std::vector<DocId>{257, 300}));
}

TEST(BlockWire, RoundTripAllShapes)
{
    EncryptedBlock list;
    list.index = 0x01020304;
    list.user[0] = 9;
    list.signal = 0x81;
    const auto wire = encode_block(list, 8);
    EXPECT_EQ(wire.size(), encoded_block_size(false, true, 8));
    EXPECT_EQ(wire[1], 0x01);
    EXPECT_EQ(decode_block(wire), list);

    EncryptedBlock bv;
    bv.kind = PayloadKind::BitVector;
    bv.owner = Block{};
    bv.owner->at(31) = 7;
    EXPECT_EQ(decode_block(encode_block(bv, 8)), bv);

    EncryptedBlock wide = list;
    wide.signal = 0xffff;
    EXPECT_EQ(decode_block(encode_block(wide, 16)), wide);
}

TEST(BlockWire, RejectsMalformed)
{
    EncryptedBlock bv;
    bv.kind = PayloadKind::BitVector;
    bv.signal = 1;
    EXPECT_THROW(encode_block(bv, 8), DomainError);

    EncryptedBlock list;
    list.signal = 0;
    auto wire = encode_block(list, 8);
    EXPECT_THROW(decode_block(ByteView(wire).subspan(0, 10)), DecodeError);
    wire[0] = 0x80;
    EXPECT_THROW(decode_block(wire), DecodeError);

    EncryptedBlock plain_bv;
    plain_bv.kind = PayloadKind::BitVector;
    auto bv_wire = encode_block(plain_bv, 8);
    bv_wire.push_back(0);
    EXPECT_THROW(decode_block(bv_wire), DecodeError);
    bv_wire.pop_back();
    bv_wire[0] |= 0x04;
    EXPECT_THROW(decode_block(bv_wire), DecodeError);
}

TEST(SignalArray, SlotBits)
{
    EncryptedBlock b;
    b.signal = 0b101;
    EXPECT_TRUE(b.slot_invalid(1));
    EXPECT_FALSE(b.slot_invalid(2));
    EXPECT_TRUE(b.slot_invalid(3));
    EXPECT_EQ(b.invalid_count(), 2u);
    EncryptedBlock none;
    none.kind = PayloadKind::BitVector;
    EXPECT_FALSE(none.slot_invalid(1));
}

TEST(GroupMap, AssignEraseLookup)
{
    GroupMap g;
    g.assign(3, "G2");
    g.assign(5, "G1");
    EXPECT_EQ(g.group_of(3), "G2");
    EXPECT_EQ(g.group_of(4), std::nullopt);
    EXPECT_EQ(g.group_index(100), GroupMap::kNone);
    g.erase(3);
    EXPECT_EQ(g.group_of(3), std::nullopt);
    EXPECT_EQ(g.to_map(), (std::map<DocId, GroupId>{{5, "G1"}}));
}

TEST(BasicEntry, BlocksAreMaskedUnderPayloadKey)
{
    const auto ex = example41();
    const auto keys = keygen({"G1"}, 1);
    const auto geom = BlockGeometry::from(ex.storage);
    const RandomOracle os(OracleLabel::Search);
    for (const auto& [w, payload] : ex.payloads) {
        const auto entry = encrypt_entry_basic(w, payload, keys, geom, os);
        EXPECT_EQ(entry.tag, prf_tag(keys.tag, w));
        const auto plain = split_blocks(payload, geom);
        ASSERT_EQ(entry.blocks.size(), plain.size());
        const auto k = derive_oracle_key(keys.payload, w);
        for (std::size_t j = 0; j < plain.size(); ++j) {
            const auto& b = entry.blocks[j];
            EXPECT_EQ(b.index, j + 1);
            EXPECT_EQ(xor_blocks(b.user, oracle_block(os, k, j + 1)), plain[j]);
            EXPECT_FALSE(b.owner.has_value());
            EXPECT_EQ(b.signal.has_value(), payload.kind == PayloadKind::List);
        }
    }
}

TEST(AuthEntry, PerSlotAndPerBitGroupMasks)
{
    // Ids 1..300 alternate between two groups.
    const auto keys = keygen({"G1", "G2"}, 4);
    GroupMap groups;
    for (DocId i = 1; i <= 300; ++i)
        groups.assign(i, i % 2 ? "G1" : "G2");
    const BlockGeometry geom{32, 300, 4};
    const RandomOracle os(OracleLabel::Search);
    std::mt19937_64 rng(2);

    PlainPayload list;
    list.ids = {7, 0, 10, 0};
    const auto le = encrypt_entry_auth("kw", list, keys, geom, groups, os, rng);
    const auto kg1 = derive_oracle_key(keys.group("G1").index, "kw");
    const auto kg2 = derive_oracle_key(keys.group("G2").index, "kw");
    const auto ko = derive_oracle_key(keys.owner, "kw");
    const auto& b = le.blocks.at(0);
    EXPECT_EQ(read_slot(xor_blocks(b.user, oracle_block(os, kg1, 1)), 1, 32), 7u);
    EXPECT_EQ(read_slot(xor_blocks(b.user, oracle_block(os, kg2, 1)), 3, 32), 10u);
    EXPECT_EQ(xor_blocks(*b.owner, oracle_block(os, ko, 1)), split_blocks(list, geom)[0]);
    // A fake slot decrypts to 0 under one of the two group keys.
    const auto f1 = read_slot(xor_blocks(b.user, oracle_block(os, kg1, 1)), 2, 32);
    const auto f2 = read_slot(xor_blocks(b.user, oracle_block(os, kg2, 1)), 2, 32);
    EXPECT_TRUE(f1 == 0 || f2 == 0);

    PlainPayload bv;
    bv.kind = PayloadKind::BitVector;
    bv.bits = BitVector(300);
    bv.bits.set(5);
    bv.bits.set(260);
    const auto be = encrypt_entry_auth("kw", bv, keys, geom, groups, os, rng);
    ASSERT_EQ(be.blocks.size(), 2u);
    for (std::uint32_t j = 1; j <= 2; ++j) {
        const auto& blk = be.blocks[j - 1];
        const auto p1 = xor_blocks(blk.user, oracle_block(os, kg1, j));
        const auto p2 = xor_blocks(blk.user, oracle_block(os, kg2, j));
        for (std::size_t rho = 1; rho <= kKappaBits; ++rho) {
            const DocId id = (j - 1) * kKappaBits + rho;
            if (id > 300)
                break;
            const bool bit = get_bit(id % 2 ? p1 : p2, rho);
            EXPECT_EQ(bit, id == 5 || id == 260) << id;
        }
        EXPECT_FALSE(blk.signal.has_value());
    }
}

TEST(AuthEntry, RejectsMissingGroupKeys)
{
    Block plain{};
    const RandomOracle os(OracleLabel::Search);
    EXPECT_THROW(encrypt_list_block_auth(plain, std::vector<GroupId>(8, "G9"), {}, 32, 1, os), DomainError);
    EXPECT_THROW(encrypt_list_block_auth(plain, std::vector<GroupId>(3, "G1"), {}, 32, 1, os), DomainError);
}
