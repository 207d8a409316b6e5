#pragma once

#include "dsse/bytes.hpp"
#include "dsse/corpus.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string_view>

namespace dsse {

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

class RandomSource
{
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    std::uint64_t next_u64();
    Block next_block();
};

/// OS entropy (RAND_bytes).
class SystemRandom final : public RandomSource
{
public:
    void fill(std::span<std::uint8_t> out) override;
};

/// HMAC-SHA256 counter-mode stream. Same seed and label give the same stream.
class DeterministicRandom final : public RandomSource
{
public:
    explicit DeterministicRandom(std::uint64_t seed, std::string_view label = "drbg");
    void fill(std::span<std::uint8_t> out) override;

private:
    std::mutex mu_;
    SecretKey key_;
    std::uint64_t counter_ = 0;
    Block buffer_{};
    std::size_t used_ = kKappaBytes;
};

std::unique_ptr<RandomSource> make_random(std::optional<std::uint64_t> seed, std::string_view label);

// ---------------------------------------------------------------------------
// Keys
// ---------------------------------------------------------------------------

struct GroupKeys
{
    SecretKey index;      // K_G: per-group payload oracle keys
    SecretKey collection; // K_G^C: per-group document encryption

    bool operator==(const GroupKeys&) const = default;
};

struct KeyRing
{
    SecretKey tag;        // K_t
    SecretKey payload;    // K_p
    SecretKey owner;      // K_o
    SecretKey doc_name;   // K_D
    SecretKey address;    // K_A
    SecretKey collection; // K_coll
    std::map<GroupId, GroupKeys> groups;

    bool operator==(const KeyRing&) const = default;

    const GroupKeys& group(const GroupId& g) const;

    void save(const std::filesystem::path& path) const;
    static KeyRing load(const std::filesystem::path& path);
    std::string serialize() const;
    static KeyRing parse(std::string_view text);
};

/// Fresh independent 256-bit keys. With a seed every key is derived
/// deterministically from it (test mode).
KeyRing keygen(const std::set<GroupId>& groups, std::optional<std::uint64_t> seed = std::nullopt);

// ---------------------------------------------------------------------------
// Pseudorandom functions
// ---------------------------------------------------------------------------

Bytes hmac_sha256(ByteView key, ByteView message);
Bytes hmac_sha512(ByteView key, ByteView message);

/// Keyword (or document-name) tag: Φ_K(w), 256 bits.
Tag prf_tag(const SecretKey& key, std::string_view input);

/// Oracle key: Ψ_K(w), 256 bits.
OracleKey derive_oracle_key(const SecretKey& key, std::string_view input);

// ---------------------------------------------------------------------------
// Random oracles
// ---------------------------------------------------------------------------

/// Test-mode witness for oracle-input reuse: remembers the plaintext masked
/// under every (key, input) and counts inputs reused with a different plaintext.
class MaskRecorder
{
public:
    void record(const OracleKey& key, std::uint64_t input, ByteView plaintext);
    std::size_t conflicts() const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<std::pair<OracleKey, std::uint64_t>, Bytes> seen_;
    std::size_t conflicts_ = 0;
};

enum class OracleLabel : std::uint8_t
{
    Search,   // O_S, 256-bit output
    Deletion, // O_D, 320-bit output (one encrypted address cell)
};

/// Keyed-hash random oracle with an optional programmed table that is
/// consulted before the hash. Queries take a shared lock only when the table
/// is non-empty.
class RandomOracle
{
public:
    explicit RandomOracle(OracleLabel label);

    OracleLabel label() const { return label_; }
    std::size_t output_bytes() const { return out_bytes_; }

    Bytes query(const OracleKey& key, std::uint64_t input) const;

    void program(const OracleKey& key, std::uint64_t input, ByteView value);
    std::optional<Bytes> programmed(const OracleKey& key, std::uint64_t input) const;
    std::size_t programmed_count() const;

    void attach_recorder(std::shared_ptr<MaskRecorder> recorder) { recorder_ = std::move(recorder); }
    void note_mask(const OracleKey& key, std::uint64_t input, ByteView plaintext) const;

private:
    Bytes hash(const OracleKey& key, std::uint64_t input) const;

    OracleLabel label_;
    std::size_t out_bytes_;
    mutable std::shared_mutex mu_;
    std::atomic<bool> has_table_{false};
    std::map<std::pair<OracleKey, std::uint64_t>, Bytes> table_;
    std::shared_ptr<MaskRecorder> recorder_;
};

/// Precomputed HMAC state for repeated O_S queries under one key, used by the
/// region search loop.
class OracleSession
{
public:
    OracleSession(const RandomOracle& oracle, const OracleKey& key);
    ~OracleSession();
    OracleSession(const OracleSession&) = delete;
    OracleSession& operator=(const OracleSession&) = delete;
    OracleSession(OracleSession&&) noexcept;

    Block block(std::uint64_t input) const;
    const OracleKey& key() const { return key_; }

private:
    const RandomOracle* oracle_;
    OracleKey key_;
    struct State;
    std::unique_ptr<State> state_;
};

struct MaskedBlock
{
    Block ciphertext{};
    std::uint32_t index = 0;

    bool operator==(const MaskedBlock&) const = default;
};

MaskedBlock mask_block(const Block& plain, const OracleKey& key, std::uint32_t index, const RandomOracle& oracle);
MaskedBlock mask_block(ByteView plain, const OracleKey& key, std::uint32_t index, const RandomOracle& oracle);
Block unmask_block(const MaskedBlock& masked, const OracleKey& key, const RandomOracle& oracle);

// ---------------------------------------------------------------------------
// Document encryption: AES-256-CTR with an HMAC-SHA256 tag.
// Layout: nonce(16) || tag(32) || body; |C| = |D| + kDocumentHeaderBytes.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDocumentHeaderBytes = 48;

Bytes encrypt_document(const SecretKey& key, ByteView plaintext, RandomSource& rng);

/// Throws IntegrityError when the tag does not verify.
Bytes decrypt_document(const SecretKey& key, ByteView ciphertext);

} // namespace dsse
