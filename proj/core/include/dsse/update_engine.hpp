#pragma once

#include "dsse/corpus.hpp"
#include "dsse/crypto.hpp"
#include "dsse/region_store.hpp"
#include "dsse/secure_index.hpp"

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace dsse {

// ---------------------------------------------------------------------------
// Update index
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kFakeField = 0xffffffffu;
inline constexpr std::size_t kAddressCellBytes = 32 + 4 + 4;

/// E_w(w) || block || slot. Fake cells carry all-ones in block and slot.
struct AddressCell
{
    Tag tag;
    std::uint32_t block = 0;
    std::uint32_t slot = 0;

    bool fake() const { return block == kFakeField && slot == kFakeField; }
    auto operator<=>(const AddressCell&) const = default;

    Bytes encode() const;
    static AddressCell decode(ByteView bytes);
    static AddressCell make_fake(const SecretKey& tag_key);
};

/// keyword -> (doc id -> location). Owned by the data owner only.
using PlacementMap = std::map<std::string, std::map<DocId, Location>>;

PlacementMap placements_from_payloads(const std::map<std::string, PlainPayload>& payloads, const BlockGeometry& geom);

struct UpdateIndexEntry
{
    Tag doc_tag;             // E_D(D) = Φ_{K_D}(name)
    std::vector<Bytes> cells; // cell k masked with O_D(K(D), k)

    bool operator==(const UpdateIndexEntry&) const = default;
};

/// ξ(D) = ceil(body_len / avg_w)
std::size_t xi(std::size_t body_len, std::size_t avg_w);

/// Smallest length >= body_len whose ξ covers `real_cells`.
std::size_t padded_length(std::size_t body_len, std::size_t real_cells, std::size_t avg_w);

/// Real cells for one document, in keyword order. Throws DomainError when a
/// keyword has no recorded placement for the document.
std::vector<AddressCell> document_cells(DocId id, const std::set<std::string>& keywords, const PlacementMap& placement,
                                        const SecretKey& tag_key);

/// Pads `cells` with fakes up to ξ(body_len) and masks each under O_D.
UpdateIndexEntry encrypt_update_entry(const std::string& name, std::vector<AddressCell> cells, std::size_t body_len,
                                      std::size_t avg_w, const KeyRing& keys, const RandomOracle& od);

struct UpdateIndexBuild
{
    std::map<DocId, UpdateIndexEntry> entries;
    std::map<DocId, std::string> bodies;                 // possibly space-padded
    std::map<DocId, std::vector<AddressCell>> plain_cells; // pre-encryption, real cells only
};

/// Builds the update index; documents whose keyword count exceeds ξ(D) are
/// padded with spaces first.
UpdateIndexBuild build_update_index(const Corpus& corpus, const PlacementMap& placement, const KeyRing& keys,
                                    std::size_t avg_w, const RandomOracle& od, const Tokenizer& tokenizer = default_tokenize);

// ---------------------------------------------------------------------------
// Deletion
// ---------------------------------------------------------------------------

struct DeletionToken
{
    Tag doc_tag;   // E_D(D)
    OracleKey key; // K(D) = Ψ_{K_A}(name)

    bool operator==(const DeletionToken&) const = default;
};

DeletionToken make_deletion_token(const std::string& name, const KeyRing& keys);

/// Unmasks all cells and drops fakes.
std::vector<AddressCell> extract_addresses(const DeletionToken& token, const UpdateIndexEntry& entry,
                                           const RandomOracle& od);

// ---------------------------------------------------------------------------
// Addition helper index
// ---------------------------------------------------------------------------

/// Free-slot bookkeeping for one keyword: delta[v] holds block locations with
/// exactly v invalid slots (v = 1..η); counter is the highest oracle input used.
struct HelperEntry
{
    std::vector<std::set<std::uint32_t>> delta; // size η + 1, index 0 unused
    std::uint64_t counter = 0;
    std::map<std::uint32_t, std::uint32_t> reserved; // column -> signal snapshot, handed out in round 1

    explicit HelperEntry(std::size_t eta = 8, std::uint64_t c = 0) : delta(eta + 1), counter(c) {}

    std::size_t free_slots() const;
    /// Level of `column` in the δ sets, 0 when absent.
    std::size_t level_of(std::uint32_t column) const;
    bool operator==(const HelperEntry&) const = default;
};

using HelperIndex = std::map<Tag, HelperEntry>;

struct DeletionReport
{
    std::size_t bits_flipped = 0;
    std::size_t slots_signaled = 0;
    std::vector<AddressCell> cells;
};

/// Applies a deletion to the search index. Every cell is validated before any
/// block is touched; an invalid cell aborts the whole mutation with a
/// ProtocolError naming it.
DeletionReport apply_deletion(const std::vector<AddressCell>& cells, RegionStore& store, HelperIndex& helper,
                              std::size_t eta);

// ---------------------------------------------------------------------------
// Addition
// ---------------------------------------------------------------------------

struct AdditionRequest
{
    std::vector<std::pair<Tag, std::uint64_t>> items; // (E_w(w), |L(w)|)

    bool operator==(const AdditionRequest&) const = default;
};

/// Owner-side state kept between the two rounds.
struct AdditionState
{
    Corpus docs;         // ids already assigned (n_total + 1, ...)
    InvertedIndex index; // over the new documents only
    std::map<Tag, std::string> keyword_of;
};

AdditionState prepare_addition(std::vector<Document> docs, DocId first_id, const std::set<std::string>& existing_names,
                               const Tokenizer& tokenizer = default_tokenize);

/// Also fills state.keyword_of.
AdditionRequest make_addition_request(AdditionState& state, const KeyRing& keys);

struct ServedBlock
{
    std::uint32_t column = 0;
    EncryptedBlock block; // including its signal array at extraction time

    bool operator==(const ServedBlock&) const = default;
};

struct ServedItem
{
    Tag tag;
    std::uint64_t counter = 0;
    std::vector<ServedBlock> blocks;

    bool operator==(const ServedItem&) const = default;
};

struct AdditionResponse
{
    std::vector<ServedItem> items;
};

/// Round 1 on the server: greedy extraction from δ^η down to δ^1 until the
/// requested slot count is covered. Extracted locations move to the reserved
/// set. Unknown tags get a fresh helper entry with counter 0.
AdditionResponse serve_addition_request(const AdditionRequest& request, HelperIndex& helper, const RegionStore& store,
                                        std::size_t eta);

struct UpdateBlock
{
    std::uint32_t column = 0;
    EncryptedBlock block;
    bool fresh = false; // new block (column == index) rather than a re-encrypted one

    bool operator==(const UpdateBlock&) const = default;
};

struct KeywordUpdate
{
    Tag tag;
    std::uint64_t new_counter = 0;
    std::vector<UpdateBlock> blocks;

    bool operator==(const KeywordUpdate&) const = default;
};

/// Owner-side result of round 2 for one keyword; placements never leave the owner.
struct OwnerKeywordUpdate
{
    KeywordUpdate update;
    std::vector<std::pair<DocId, Location>> placements;
};

/// How the owner masks list blocks for one keyword.
struct ListEncryptor
{
    bool auth = false;
    unsigned id_bits = 32;
    const KeywordKeys* keys = nullptr;
    const GroupMap* groups = nullptr; // auth only; must already contain new ids
    const RandomOracle* oracle = nullptr;
    std::mt19937_64* rng = nullptr;

    EncryptedBlock encrypt(const Block& plain, std::uint32_t index) const;
    Block decrypt(const EncryptedBlock& block) const; // owner part in auth mode, K_p otherwise
};

/// Round 2 on the owner for one keyword: refill invalid slots with new ids
/// (picked in random order), pack the rest into ceil(r/η) new blocks and
/// re-encrypt everything with inputs c+1, c+2, ...; signal arrays are cleared.
/// Invalid slots left over are set to the fake id 0.
OwnerKeywordUpdate owner_build_update_blocks(const ServedItem& served, std::vector<DocId> new_ids, const ListEncryptor& enc);

struct AdditionReport
{
    std::size_t reencrypted_blocks = 0;
    std::size_t new_blocks = 0;
    std::size_t new_rows = 0;
};

/// Server side of round 2 for the search and helper indexes. Throws
/// ProtocolError on column collisions, unknown reservations or reserved blocks
/// whose signal array changed since round 1.
AdditionReport apply_addition(const std::vector<KeywordUpdate>& updates, RegionStore& store, HelperIndex& helper);

/// Returns reserved locations to the δ sets (used when round 2 is abandoned).
void release_reservations(const AdditionResponse& response, HelperIndex& helper, const RegionStore& store);

} // namespace dsse
