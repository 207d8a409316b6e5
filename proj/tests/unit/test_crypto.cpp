#include <dsse/bytes.hpp>
#include <dsse/crypto.hpp>
#include <dsse/errors.hpp>

#include <gtest/gtest.h>

#include <set>
#include <string>

using namespace dsse;

namespace {

SecretKey counting_key()
{
    SecretKey k;
    for (std::size_t i = 0; i < 32; ++i)
        k.bytes[i] = static_cast<std::uint8_t>(i);
    return k;
}

OracleKey counting_oracle_key()
{
    return fixed_from_view<OracleKeyTag>(counting_key().view());
}

Bytes text(std::string_view s)
{
    return Bytes(s.begin(), s.end());
}

} // namespace

TEST(Hex, RoundTrip)
{
    const Bytes b{0x00, 0x7f, 0xa0, 0xff};
    EXPECT_EQ(to_hex(b), "007fa0ff");
    EXPECT_EQ(from_hex("007FA0ff"), b);
    EXPECT_THROW(from_hex("abc"), DecodeError);
    EXPECT_THROW(from_hex("zz"), DecodeError);
}

TEST(Bits, MsbFirstAndSlots)
{
    Block b{};
    set_bit(b, 1, true);
    set_bit(b, 256, true);
    EXPECT_EQ(b[0], 0x80);
    EXPECT_EQ(b[31], 0x01);
    flip_bit(b, 1);
    EXPECT_FALSE(get_bit(b, 1));

    Block s{};
    write_slot(s, 2, 32, 0x01020304);
    EXPECT_EQ(s[4], 0x01);
    EXPECT_EQ(s[7], 0x04);
    EXPECT_EQ(read_slot(s, 2, 32), 0x01020304u);
    write_slot(s, 1, 16, 0xbeef);
    EXPECT_EQ(read_slot(s, 1, 16), 0xbeefu);
    write_slot(s, 4, 64, 0x1122334455667788ull);
    EXPECT_EQ(read_slot(s, 4, 64), 0x1122334455667788ull);
}

TEST(Hmac, Rfc4231Case1)
{
    const Bytes key(20, 0x0b);
    EXPECT_EQ(to_hex(hmac_sha256(key, text("Hi There"))),
              "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7");
    EXPECT_EQ(to_hex(hmac_sha512(key, text("Hi There"))),
              "87aa7cdea5ef619d4ff0b4241a1d6cb02379f4e2ce4ec2787ad0b30545e17cde"
              "daa833b7d6b8a702038b274eaea3f4e4be9d914eeb61f1702e696c203a126854");
}

// Known answers computed with Python's hmac module.
TEST(Prf, KnownAnswers)
{
    EXPECT_EQ(to_hex(prf_tag(counting_key(), "alpha")),
              "a0e09b55038e131f37d63c345ac071db90f9bbd39edfefef1593c08429c4c456");
    EXPECT_EQ(to_hex(derive_oracle_key(counting_key(), "alpha")),
              "8e6949ab58dfd8b12ca0d1b06c4389915ce1a5392339b701b8f6b326d7371025");
}

TEST(Prf, DomainSeparated)
{
    const auto k = counting_key();
    EXPECT_NE(prf_tag(k, "alpha").bytes, derive_oracle_key(k, "alpha").bytes);
    EXPECT_NE(prf_tag(k, "alpha"), prf_tag(k, "alphb"));
}

TEST(RandomOracle, KnownAnswers)
{
    const RandomOracle os(OracleLabel::Search);
    const RandomOracle od(OracleLabel::Deletion);
    EXPECT_EQ(os.output_bytes(), 32u);
    EXPECT_EQ(od.output_bytes(), 40u);
    EXPECT_EQ(to_hex(os.query(counting_oracle_key(), 7)),
              "75485e84700da5c1bb4a406cf5728e9e7b737cb80006122169d192e1e2c35515");
    EXPECT_EQ(to_hex(od.query(counting_oracle_key(), 3)),
              "88a1fd7926c293e282f07d1ddaccf2100dad5e4c2b52c131350e7a380976250ab6b9114b0fda897b");
}

TEST(RandomOracle, SessionMatchesQuery)
{
    const RandomOracle os(OracleLabel::Search);
    const OracleSession session(os, counting_oracle_key());
    for (std::uint64_t j : {0ull, 1ull, 7ull, 123456789ull})
        EXPECT_EQ(to_hex(session.block(j)), to_hex(os.query(counting_oracle_key(), j)));
}

TEST(RandomOracle, ProgrammedTableTakesPrecedence)
{
    RandomOracle os(OracleLabel::Search);
    const Bytes value(32, 0x5a);
    os.program(counting_oracle_key(), 7, value);
    EXPECT_EQ(os.query(counting_oracle_key(), 7), value);
    EXPECT_EQ(os.programmed_count(), 1u);
    EXPECT_NE(os.query(counting_oracle_key(), 8), value);
    const OracleSession session(os, counting_oracle_key());
    const auto programmed = session.block(7);
    EXPECT_EQ(Bytes(programmed.begin(), programmed.end()), value);
    EXPECT_THROW(os.program(counting_oracle_key(), 9, Bytes(5, 0)), DomainError);
}

TEST(RandomOracle, MaskRoundTrip)
{
    const RandomOracle os(OracleLabel::Search);
    Block plain{};
    plain[3] = 0x42;
    const auto masked = mask_block(plain, counting_oracle_key(), 5, os);
    EXPECT_EQ(masked.index, 5u);
    EXPECT_NE(masked.ciphertext, plain);
    EXPECT_EQ(unmask_block(masked, counting_oracle_key(), os), plain);
}

TEST(MaskRecorder, CountsConflictingReuse)
{
    MaskRecorder r;
    const Bytes a{1, 2}, b{3, 4};
    r.record(counting_oracle_key(), 1, a);
    r.record(counting_oracle_key(), 1, a);
    EXPECT_EQ(r.conflicts(), 0u);
    r.record(counting_oracle_key(), 1, b);
    EXPECT_EQ(r.conflicts(), 1u);
    EXPECT_EQ(r.size(), 1u);
}

TEST(DeterministicRandom, Reproducible)
{
    DeterministicRandom a(5, "x"), b(5, "x"), c(5, "y");
    const auto va = a.next_block();
    EXPECT_EQ(va, b.next_block());
    EXPECT_NE(va, c.next_block());
}

TEST(Keys, GenerateDistinctAndSerialize)
{
    const auto keys = keygen({"G1", "G2"});
    std::set<SecretKey> all{keys.tag, keys.payload, keys.owner, keys.doc_name, keys.address, keys.collection};
    for (const auto& [g, k] : keys.groups) {
        all.insert(k.index);
        all.insert(k.collection);
    }
    EXPECT_EQ(all.size(), 10u);
    EXPECT_EQ(KeyRing::parse(keys.serialize()), keys);
    EXPECT_EQ(keygen({"G1"}, 9), keygen({"G1"}, 9));
    EXPECT_NE(keygen({"G1"}, 9), keygen({"G1"}, 10));
    EXPECT_THROW(keys.group("G9"), DomainError);
}

TEST(DocumentCipher, RoundTripAndLength)
{
    DeterministicRandom rng(1);
    const auto key = counting_key();
    for (std::size_t len : {0u, 1u, 15u, 16u, 17u, 1000u}) {
        const Bytes body(len, 'q');
        const auto ct = encrypt_document(key, body, rng);
        EXPECT_EQ(ct.size(), len + kDocumentHeaderBytes);
        EXPECT_EQ(decrypt_document(key, ct), body);
    }
}

TEST(DocumentCipher, DetectsTamperingAndWrongKey)
{
    DeterministicRandom rng(1);
    const auto ct = encrypt_document(counting_key(), text("secret body"), rng);
    auto bad = ct;
    bad.back() ^= 1;
    EXPECT_THROW(decrypt_document(counting_key(), bad), IntegrityError);
    EXPECT_THROW(decrypt_document(keygen({}, 3).collection, ct), IntegrityError);
    EXPECT_THROW(decrypt_document(counting_key(), Bytes(10, 0)), IntegrityError);
}

TEST(DocumentCipher, FreshNonces)
{
    DeterministicRandom rng(1);
    const auto a = encrypt_document(counting_key(), text("same"), rng);
    const auto b = encrypt_document(counting_key(), text("same"), rng);
    EXPECT_NE(a, b);
}
