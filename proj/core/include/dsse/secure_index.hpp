#pragma once

#include "dsse/bytes.hpp"
#include "dsse/corpus.hpp"
#include "dsse/crypto.hpp"
#include "dsse/payload.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dsse {

struct BlockGeometry
{
    unsigned id_bits = 32;
    std::uint64_t n = 0;       // setup document count (bit-vector length)
    std::uint64_t upsilon = 1; // list capacity

    /// Identifiers per list block, also the signal-array width η.
    std::size_t cp() const { return kKappaBits / id_bits; }
    std::size_t eta() const { return cp(); }
    std::uint64_t ell() const { return (n + kKappaBits - 1) / kKappaBits; }
    std::uint64_t iota() const { return (upsilon + cp() - 1) / cp(); }
    std::uint64_t blocks_for(PayloadKind kind) const { return kind == PayloadKind::BitVector ? ell() : iota(); }

    static BlockGeometry from(const StorageParams& p) { return {p.id_bits, p.n, p.upsilon}; }
};

/// Where one identifier lives inside a keyword's payload: block location
/// (the column) and 1-based slot (bit position for bit-vector blocks).
struct Location
{
    std::uint32_t block = 0;
    std::uint32_t slot = 0;

    auto operator<=>(const Location&) const = default;
};

std::vector<Block> split_blocks(const PlainPayload& payload, const BlockGeometry& geom);

/// Inverse of split_blocks.
PlainPayload join_blocks(PayloadKind kind, const std::vector<Block>& blocks, const BlockGeometry& geom);

/// (id, location) for every real identifier of the payload.
std::vector<std::pair<DocId, Location>> payload_placements(const PlainPayload& payload, const BlockGeometry& geom);

/// Identifiers with a set bit in bit-vector block `column`, limited to ids <= max_id.
std::vector<DocId> bitvec_block_ids(const Block& plain, std::uint32_t column, std::uint64_t max_id);

// ---------------------------------------------------------------------------

struct EncryptedBlock
{
    std::uint32_t index = 0; // oracle input
    PayloadKind kind = PayloadKind::List;
    Block user{};                        // π: the only part in the basic scheme
    std::optional<Block> owner;          // φ: authorization mode only
    std::optional<std::uint32_t> signal; // list blocks only; bit (x-1) marks slot x invalid

    bool slot_invalid(std::size_t slot) const { return signal && ((*signal >> (slot - 1)) & 1u); }
    std::size_t invalid_count() const;

    bool operator==(const EncryptedBlock&) const = default;
};

// Wire format: flags(1) || index(4, big-endian) || user(32) || [owner(32)] || [signal(ceil(eta/8))].
// flags bit0 = list kind, bit1 = owner part present, bit2 = signal present.
Bytes encode_block(const EncryptedBlock& block, std::size_t eta);
EncryptedBlock decode_block(ByteView wire);
std::size_t encoded_block_size(bool owner, bool signal, std::size_t eta);

struct EncryptedEntry
{
    Tag tag;
    PayloadKind kind = PayloadKind::List;
    std::vector<EncryptedBlock> blocks; // index j = position + 1 at setup
};

// ---------------------------------------------------------------------------

/// Document -> access group map shared with the server in authorization mode.
/// Groups are interned so per-bit lookups during search stay cheap.
class GroupMap
{
public:
    static constexpr int kNone = -1;

    void assign(DocId id, const GroupId& group);
    void erase(DocId id);

    int group_index(DocId id) const
    {
        return id < by_id_.size() ? by_id_[id] : kNone;
    }
    int index_of(const GroupId& group) const;
    std::optional<GroupId> group_of(DocId id) const;
    const GroupId& name(int index) const { return names_[static_cast<std::size_t>(index)]; }
    std::size_t group_count() const { return names_.size(); }

    std::map<DocId, GroupId> to_map() const;
    bool operator==(const GroupMap& o) const { return to_map() == o.to_map(); }

private:
    std::vector<GroupId> names_;
    std::map<GroupId, int> index_;
    std::vector<int> by_id_;
};

/// All oracle keys needed to encrypt one keyword's payload.
struct KeywordKeys
{
    Tag tag;
    OracleKey basic;                         // Ψ_{K_p}(w)
    OracleKey owner;                         // Ψ_{K_o}(w)
    OracleKey tail;                          // masks bit-vector bits past n
    std::map<GroupId, OracleKey> group_keys; // Ψ_{K_G}(w)
};

KeywordKeys keyword_keys(const KeyRing& keys, const std::string& keyword);

/// Basic (single-key) encryption of a keyword payload, blocks numbered 1..r.
EncryptedEntry encrypt_entry_basic(const std::string& keyword, const PlainPayload& payload, const KeyRing& keys,
                                   const BlockGeometry& geom, const RandomOracle& oracle);

/// Per-slot masking: slot x uses the x-th |id|-bit window of O_S(K(w, g_x), j).
Block encrypt_list_block_auth(const Block& plain, const std::vector<GroupId>& slot_groups,
                              const std::map<GroupId, OracleKey>& group_keys, unsigned id_bits, std::uint32_t index,
                              const RandomOracle& oracle);

/// Group-oriented bit selection: bit ρ comes from B ⊕ O_S(K(w, g(id_ρ)), j).
/// `bit_groups` has κ entries; an empty optional marks a tail bit masked with `tail_key`.
Block encrypt_bitvec_block_auth(const Block& plain, const std::vector<std::optional<GroupId>>& bit_groups,
                                const std::map<GroupId, OracleKey>& group_keys, const OracleKey& tail_key,
                                std::uint32_t index, const RandomOracle& oracle);

Block encrypt_owner_block(const Block& plain, const OracleKey& owner_key, std::uint32_t index,
                          const RandomOracle& oracle);

/// Authorization-aware encryption: user part per group, owner part under K_o.
/// Fake list slots are masked under a uniformly drawn real group.
EncryptedEntry encrypt_entry_auth(const std::string& keyword, const PlainPayload& payload, const KeyRing& keys,
                                  const BlockGeometry& geom, const GroupMap& groups, const RandomOracle& oracle,
                                  std::mt19937_64& rng);

/// Builds one authorization-mode list block (used by additions as well as setup).
EncryptedBlock encrypt_list_block_full(const Block& plain, const KeywordKeys& kk, const GroupMap& groups,
                                       unsigned id_bits, std::uint32_t index, const RandomOracle& oracle,
                                       std::mt19937_64& rng);

} // namespace dsse
