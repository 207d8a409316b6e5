#include "dsse/secure_index.hpp"

#include "dsse/errors.hpp"

#include <bit>

namespace dsse {

std::vector<Block> split_blocks(const PlainPayload& payload, const BlockGeometry& geom)
{
    std::vector<Block> blocks;
    if (payload.kind == PayloadKind::BitVector) {
        blocks.assign(geom.ell(), Block{});
        const auto& bytes = payload.bits.bytes();
        // Positions are MSB-first in both the payload and the blocks, so whole
        // bytes copy across; bits past n stay zero.
        for (std::size_t i = 0; i < bytes.size(); ++i)
            blocks[i / kKappaBytes][i % kKappaBytes] = bytes[i];
        if (payload.bits.size() % 8 != 0 && !bytes.empty()) {
            const std::size_t last = bytes.size() - 1;
            const unsigned keep = payload.bits.size() % 8;
            blocks[last / kKappaBytes][last % kKappaBytes] &= static_cast<std::uint8_t>(0xff << (8 - keep));
        }
        return blocks;
    }
    const std::size_t cp = geom.cp();
    blocks.assign(geom.iota(), Block{});
    for (std::size_t k = 0; k < payload.ids.size(); ++k)
        write_slot(blocks[k / cp], k % cp + 1, geom.id_bits, payload.ids[k]);
    return blocks;
}

PlainPayload join_blocks(PayloadKind kind, const std::vector<Block>& blocks, const BlockGeometry& geom)
{
    PlainPayload p;
    p.kind = kind;
    if (kind == PayloadKind::BitVector) {
        p.bits = BitVector(geom.n);
        for (std::uint64_t pos = 1; pos <= geom.n; ++pos) {
            const auto& b = blocks.at((pos - 1) / kKappaBits);
            if (get_bit(b, (pos - 1) % kKappaBits + 1))
                p.bits.set(pos);
        }
        return p;
    }
    const std::size_t cp = geom.cp();
    p.ids.resize(geom.upsilon);
    for (std::size_t k = 0; k < geom.upsilon; ++k)
        p.ids[k] = read_slot(blocks.at(k / cp), k % cp + 1, geom.id_bits);
    return p;
}

std::vector<std::pair<DocId, Location>> payload_placements(const PlainPayload& payload, const BlockGeometry& geom)
{
    std::vector<std::pair<DocId, Location>> out;
    if (payload.kind == PayloadKind::BitVector) {
        for (std::uint64_t pos = 1; pos <= payload.bits.size(); ++pos)
            if (payload.bits.test(pos))
                out.push_back({pos, Location{static_cast<std::uint32_t>((pos - 1) / kKappaBits + 1),
                                             static_cast<std::uint32_t>((pos - 1) % kKappaBits + 1)}});
        return out;
    }
    const std::size_t cp = geom.cp();
    for (std::size_t k = 0; k < payload.ids.size(); ++k)
        if (payload.ids[k] != 0)
            out.push_back({payload.ids[k],
                           Location{static_cast<std::uint32_t>(k / cp + 1), static_cast<std::uint32_t>(k % cp + 1)}});
    return out;
}

std::vector<DocId> bitvec_block_ids(const Block& plain, std::uint32_t column, std::uint64_t max_id)
{
    std::vector<DocId> ids;
    const std::uint64_t base = static_cast<std::uint64_t>(column - 1) * kKappaBits;
    for (std::size_t byte = 0; byte < plain.size(); ++byte) {
        if (plain[byte] == 0)
            continue;
        for (unsigned bit = 0; bit < 8; ++bit) {
            if ((plain[byte] >> (7 - bit)) & 1u) {
                const DocId id = base + byte * 8 + bit + 1;
                if (id <= max_id)
                    ids.push_back(id);
            }
        }
    }
    return ids;
}

// ---------------------------------------------------------------------------

std::size_t EncryptedBlock::invalid_count() const
{
    return signal ? static_cast<std::size_t>(std::popcount(*signal)) : 0;
}

std::size_t encoded_block_size(bool owner, bool signal, std::size_t eta)
{
    return 1 + 4 + kKappaBytes + (owner ? kKappaBytes : 0) + (signal ? (eta + 7) / 8 : 0);
}

Bytes encode_block(const EncryptedBlock& block, std::size_t eta)
{
    if (block.signal && block.kind != PayloadKind::List)
        throw DomainError("bit-vector blocks never carry a signal array");
    Bytes out;
    out.reserve(encoded_block_size(block.owner.has_value(), block.signal.has_value(), eta));
    std::uint8_t flags = 0;
    if (block.kind == PayloadKind::List)
        flags |= 0x01;
    if (block.owner)
        flags |= 0x02;
    if (block.signal)
        flags |= 0x04;
    out.push_back(flags);
    put_be32(out, block.index);
    out.insert(out.end(), block.user.begin(), block.user.end());
    if (block.owner)
        out.insert(out.end(), block.owner->begin(), block.owner->end());
    if (block.signal) {
        const std::size_t nbytes = (eta + 7) / 8;
        for (std::size_t i = 0; i < nbytes; ++i) {
            std::uint8_t byte = 0;
            for (std::size_t b = 0; b < 8; ++b) {
                const std::size_t slot = i * 8 + b + 1;
                if (slot <= eta && ((*block.signal >> (slot - 1)) & 1u))
                    byte |= static_cast<std::uint8_t>(0x80u >> b);
            }
            out.push_back(byte);
        }
    }
    return out;
}

EncryptedBlock decode_block(ByteView wire)
{
    if (wire.size() < 1 + 4 + kKappaBytes)
        throw DecodeError("encrypted block truncated");
    EncryptedBlock b;
    const std::uint8_t flags = wire[0];
    if (flags & ~0x07u)
        throw DecodeError("unknown block flags");
    b.kind = (flags & 0x01) ? PayloadKind::List : PayloadKind::BitVector;
    b.index = get_be32(wire, 1);
    std::size_t off = 5;
    std::copy_n(wire.begin() + static_cast<std::ptrdiff_t>(off), kKappaBytes, b.user.begin());
    off += kKappaBytes;
    if (flags & 0x02) {
        if (wire.size() < off + kKappaBytes)
            throw DecodeError("owner part truncated");
        Block owner{};
        std::copy_n(wire.begin() + static_cast<std::ptrdiff_t>(off), kKappaBytes, owner.begin());
        b.owner = owner;
        off += kKappaBytes;
    }
    if (flags & 0x04) {
        if (!(flags & 0x01))
            throw DecodeError("signal array on a bit-vector block");
        const std::size_t nbytes = wire.size() - off;
        if (nbytes == 0 || nbytes > 4)
            throw DecodeError("bad signal array length");
        std::uint32_t sig = 0;
        for (std::size_t i = 0; i < nbytes; ++i)
            for (std::size_t bit = 0; bit < 8; ++bit)
                if ((wire[off + i] >> (7 - bit)) & 1u)
                    sig |= std::uint32_t{1} << (i * 8 + bit);
        b.signal = sig;
        off += nbytes;
    }
    if (off != wire.size())
        throw DecodeError("trailing bytes after encrypted block");
    return b;
}

// ---------------------------------------------------------------------------

void GroupMap::assign(DocId id, const GroupId& group)
{
    auto [it, inserted] = index_.try_emplace(group, static_cast<int>(names_.size()));
    if (inserted)
        names_.push_back(group);
    if (id >= by_id_.size())
        by_id_.resize(id + 1, kNone);
    by_id_[id] = it->second;
}

void GroupMap::erase(DocId id)
{
    if (id < by_id_.size())
        by_id_[id] = kNone;
}

int GroupMap::index_of(const GroupId& group) const
{
    auto it = index_.find(group);
    return it == index_.end() ? kNone : it->second;
}

std::optional<GroupId> GroupMap::group_of(DocId id) const
{
    int g = group_index(id);
    if (g == kNone)
        return std::nullopt;
    return names_[static_cast<std::size_t>(g)];
}

std::map<DocId, GroupId> GroupMap::to_map() const
{
    std::map<DocId, GroupId> out;
    for (std::size_t id = 0; id < by_id_.size(); ++id)
        if (by_id_[id] != kNone)
            out.emplace(id, names_[static_cast<std::size_t>(by_id_[id])]);
    return out;
}

// ---------------------------------------------------------------------------

KeywordKeys keyword_keys(const KeyRing& keys, const std::string& keyword)
{
    KeywordKeys kk;
    kk.tag = prf_tag(keys.tag, keyword);
    kk.basic = derive_oracle_key(keys.payload, keyword);
    kk.owner = derive_oracle_key(keys.owner, keyword);
    kk.tail = derive_oracle_key(keys.owner, std::string("\x01tail\x00", 6) + keyword);
    for (const auto& [g, gk] : keys.groups)
        kk.group_keys.emplace(g, derive_oracle_key(gk.index, keyword));
    return kk;
}

EncryptedEntry encrypt_entry_basic(const std::string& keyword, const PlainPayload& payload, const KeyRing& keys,
                                   const BlockGeometry& geom, const RandomOracle& oracle)
{
    EncryptedEntry entry;
    entry.tag = prf_tag(keys.tag, keyword);
    entry.kind = payload.kind;
    const auto key = derive_oracle_key(keys.payload, keyword);
    auto plain = split_blocks(payload, geom);
    entry.blocks.reserve(plain.size());
    for (std::size_t j = 0; j < plain.size(); ++j) {
        auto masked = mask_block(plain[j], key, static_cast<std::uint32_t>(j + 1), oracle);
        EncryptedBlock b;
        b.index = masked.index;
        b.kind = payload.kind;
        b.user = masked.ciphertext;
        if (payload.kind == PayloadKind::List)
            b.signal = 0;
        entry.blocks.push_back(b);
    }
    return entry;
}

Block encrypt_list_block_auth(const Block& plain, const std::vector<GroupId>& slot_groups,
                              const std::map<GroupId, OracleKey>& group_keys, unsigned id_bits, std::uint32_t index,
                              const RandomOracle& oracle)
{
    const std::size_t cp = kKappaBits / id_bits;
    if (slot_groups.size() != cp)
        throw DomainError("need one group per list slot");
    const std::size_t width = id_bits / 8;
    std::map<GroupId, Block> pads;
    Block out = plain;
    for (std::size_t x = 0; x < cp; ++x) {
        auto it = group_keys.find(slot_groups[x]);
        if (it == group_keys.end())
            throw DomainError("no oracle key for group " + slot_groups[x]);
        auto pad = pads.find(slot_groups[x]);
        if (pad == pads.end()) {
            oracle.note_mask(it->second, index, plain);
            pad = pads.emplace(slot_groups[x], to_block(oracle.query(it->second, index))).first;
        }
        for (std::size_t k = x * width; k < (x + 1) * width; ++k)
            out[k] ^= pad->second[k];
    }
    return out;
}

Block encrypt_bitvec_block_auth(const Block& plain, const std::vector<std::optional<GroupId>>& bit_groups,
                                const std::map<GroupId, OracleKey>& group_keys, const OracleKey& tail_key,
                                std::uint32_t index, const RandomOracle& oracle)
{
    if (bit_groups.size() != kKappaBits)
        throw DomainError("need one group per bit");
    std::map<GroupId, Block> pads;
    std::optional<Block> tail_pad;
    Block out{};
    for (std::size_t rho = 1; rho <= kKappaBits; ++rho) {
        const Block* pad = nullptr;
        const auto& g = bit_groups[rho - 1];
        if (!g) {
            if (!tail_pad) {
                oracle.note_mask(tail_key, index, plain);
                tail_pad = to_block(oracle.query(tail_key, index));
            }
            pad = &*tail_pad;
        } else {
            auto it = pads.find(*g);
            if (it == pads.end()) {
                auto k = group_keys.find(*g);
                if (k == group_keys.end())
                    throw DomainError("no oracle key for group " + *g);
                oracle.note_mask(k->second, index, plain);
                it = pads.emplace(*g, to_block(oracle.query(k->second, index))).first;
            }
            pad = &it->second;
        }
        set_bit(out, rho, get_bit(plain, rho) ^ get_bit(*pad, rho));
    }
    return out;
}

Block encrypt_owner_block(const Block& plain, const OracleKey& owner_key, std::uint32_t index,
                          const RandomOracle& oracle)
{
    return mask_block(plain, owner_key, index, oracle).ciphertext;
}

namespace {

GroupId random_group(const std::map<GroupId, OracleKey>& keys, std::mt19937_64& rng)
{
    std::uniform_int_distribution<std::size_t> pick(0, keys.size() - 1);
    return std::next(keys.begin(), static_cast<std::ptrdiff_t>(pick(rng)))->first;
}

} // namespace

EncryptedBlock encrypt_list_block_full(const Block& plain, const KeywordKeys& kk, const GroupMap& groups,
                                       unsigned id_bits, std::uint32_t index, const RandomOracle& oracle,
                                       std::mt19937_64& rng)
{
    if (kk.group_keys.empty())
        throw DomainError("authorization mode needs at least one group key");
    const std::size_t cp = kKappaBits / id_bits;
    std::vector<GroupId> slot_groups(cp);
    for (std::size_t x = 1; x <= cp; ++x) {
        const DocId id = read_slot(plain, x, id_bits);
        auto g = id == 0 ? std::nullopt : groups.group_of(id);
        slot_groups[x - 1] = g ? *g : random_group(kk.group_keys, rng);
    }
    EncryptedBlock b;
    b.index = index;
    b.kind = PayloadKind::List;
    b.user = encrypt_list_block_auth(plain, slot_groups, kk.group_keys, id_bits, index, oracle);
    b.owner = encrypt_owner_block(plain, kk.owner, index, oracle);
    b.signal = 0;
    return b;
}

EncryptedEntry encrypt_entry_auth(const std::string& keyword, const PlainPayload& payload, const KeyRing& keys,
                                  const BlockGeometry& geom, const GroupMap& groups, const RandomOracle& oracle,
                                  std::mt19937_64& rng)
{
    const auto kk = keyword_keys(keys, keyword);
    EncryptedEntry entry;
    entry.tag = kk.tag;
    entry.kind = payload.kind;
    auto plain = split_blocks(payload, geom);
    entry.blocks.reserve(plain.size());
    for (std::size_t j = 0; j < plain.size(); ++j) {
        const auto index = static_cast<std::uint32_t>(j + 1);
        if (payload.kind == PayloadKind::List) {
            entry.blocks.push_back(encrypt_list_block_full(plain[j], kk, groups, geom.id_bits, index, oracle, rng));
            continue;
        }
        std::vector<std::optional<GroupId>> bit_groups(kKappaBits);
        for (std::size_t rho = 1; rho <= kKappaBits; ++rho) {
            const DocId id = j * kKappaBits + rho;
            if (id <= geom.n)
                bit_groups[rho - 1] = groups.group_of(id);
        }
        EncryptedBlock b;
        b.index = index;
        b.kind = PayloadKind::BitVector;
        b.user = encrypt_bitvec_block_auth(plain[j], bit_groups, kk.group_keys, kk.tail, index, oracle);
        b.owner = encrypt_owner_block(plain[j], kk.owner, index, oracle);
        entry.blocks.push_back(b);
    }
    return entry;
}

} // namespace dsse
