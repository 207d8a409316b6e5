#include "dsse/update_engine.hpp"

#include "dsse/errors.hpp"

#include <algorithm>
#include <bit>

namespace dsse {

Bytes AddressCell::encode() const
{
    Bytes out(tag.bytes.begin(), tag.bytes.end());
    put_be32(out, block);
    put_be32(out, slot);
    return out;
}

AddressCell AddressCell::decode(ByteView bytes)
{
    if (bytes.size() != kAddressCellBytes)
        throw DecodeError("address cell must be 40 bytes");
    AddressCell c;
    c.tag = fixed_from_view<KeywordTagTag>(bytes.first(32));
    c.block = get_be32(bytes, 32);
    c.slot = get_be32(bytes, 36);
    return c;
}

AddressCell AddressCell::make_fake(const SecretKey& tag_key)
{
    return {prf_tag(tag_key, std::string("\0fake", 5)), kFakeField, kFakeField};
}

PlacementMap placements_from_payloads(const std::map<std::string, PlainPayload>& payloads, const BlockGeometry& geom)
{
    PlacementMap out;
    for (const auto& [w, p] : payloads) {
        auto& m = out[w];
        for (const auto& [id, loc] : payload_placements(p, geom))
            m.emplace(id, loc);
    }
    return out;
}

std::size_t xi(std::size_t body_len, std::size_t avg_w)
{
    if (avg_w == 0)
        throw DomainError("avg_w must be positive");
    return (body_len + avg_w - 1) / avg_w;
}

std::size_t padded_length(std::size_t body_len, std::size_t real_cells, std::size_t avg_w)
{
    if (xi(body_len, avg_w) >= real_cells)
        return body_len;
    return std::max(body_len, (real_cells - 1) * avg_w + 1);
}

std::vector<AddressCell> document_cells(DocId id, const std::set<std::string>& keywords, const PlacementMap& placement,
                                        const SecretKey& tag_key)
{
    std::vector<AddressCell> cells;
    cells.reserve(keywords.size());
    for (const auto& w : keywords) {
        auto kw = placement.find(w);
        const Location* loc = nullptr;
        if (kw != placement.end()) {
            auto it = kw->second.find(id);
            if (it != kw->second.end())
                loc = &it->second;
        }
        if (!loc)
            throw DomainError("no placement for document " + std::to_string(id) + " under keyword '" + w + "'");
        cells.push_back({prf_tag(tag_key, w), loc->block, loc->slot});
    }
    return cells;
}

UpdateIndexEntry encrypt_update_entry(const std::string& name, std::vector<AddressCell> cells, std::size_t body_len,
                                      std::size_t avg_w, const KeyRing& keys, const RandomOracle& od)
{
    const std::size_t target = xi(body_len, avg_w);
    if (cells.size() > target)
        throw DomainError("document '" + name + "' has more cells than its padded length allows");
    const auto fake = AddressCell::make_fake(keys.tag);
    cells.resize(target, fake);

    const auto key = derive_oracle_key(keys.address, name);
    UpdateIndexEntry entry;
    entry.doc_tag = prf_tag(keys.doc_name, name);
    entry.cells.reserve(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
        Bytes cell = cells[k].encode();
        od.note_mask(key, k + 1, cell);
        xor_into(cell, od.query(key, k + 1));
        entry.cells.push_back(std::move(cell));
    }
    return entry;
}

UpdateIndexBuild build_update_index(const Corpus& corpus, const PlacementMap& placement, const KeyRing& keys,
                                    std::size_t avg_w, const RandomOracle& od, const Tokenizer& tokenizer)
{
    UpdateIndexBuild out;
    for (const auto& d : corpus.documents) {
        auto cells = document_cells(d.id, extract_keywords(d.body, tokenizer), placement, keys.tag);
        std::string body = d.body;
        body.resize(padded_length(body.size(), cells.size(), avg_w), ' ');
        out.plain_cells[d.id] = cells;
        out.entries[d.id] = encrypt_update_entry(d.name, std::move(cells), body.size(), avg_w, keys, od);
        out.bodies[d.id] = std::move(body);
    }
    return out;
}

// ---------------------------------------------------------------------------

DeletionToken make_deletion_token(const std::string& name, const KeyRing& keys)
{
    return {prf_tag(keys.doc_name, name), derive_oracle_key(keys.address, name)};
}

std::vector<AddressCell> extract_addresses(const DeletionToken& token, const UpdateIndexEntry& entry,
                                           const RandomOracle& od)
{
    if (token.doc_tag != entry.doc_tag)
        throw NotFound("deletion token does not match the update-index entry");
    std::vector<AddressCell> out;
    for (std::size_t k = 0; k < entry.cells.size(); ++k) {
        Bytes cell = entry.cells[k];
        xor_into(cell, od.query(token.key, k + 1));
        auto c = AddressCell::decode(cell);
        if (!c.fake())
            out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::size_t HelperEntry::free_slots() const
{
    std::size_t n = 0;
    for (std::size_t v = 1; v < delta.size(); ++v)
        n += v * delta[v].size();
    return n;
}

std::size_t HelperEntry::level_of(std::uint32_t column) const
{
    for (std::size_t v = 1; v < delta.size(); ++v)
        if (delta[v].count(column))
            return v;
    return 0;
}

DeletionReport apply_deletion(const std::vector<AddressCell>& cells, RegionStore& store, HelperIndex& helper,
                              std::size_t eta)
{
    // Validate every cell first so a bad one leaves the index untouched.
    std::set<std::pair<Tag, std::pair<std::uint32_t, std::uint32_t>>> seen;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto& c = cells[k];
        const std::string where = "cell " + std::to_string(k + 1) + " (block " + std::to_string(c.block) + ", slot " +
                                  std::to_string(c.slot) + ")";
        if (c.block == 0 || c.slot == 0)
            throw ProtocolError(where + ": zero block or slot");
        if (!seen.insert({c.tag, {c.block, c.slot}}).second)
            throw ProtocolError(where + ": repeated address");
        EncryptedBlock b;
        try {
            b = store.region(region_of_block(c.block, store.m())).get_block(c.tag, c.block);
        } catch (const NotFound& e) {
            throw ProtocolError(where + ": " + e.what());
        }
        if (b.kind == PayloadKind::BitVector) {
            if (c.slot > kKappaBits)
                throw ProtocolError(where + ": bit position out of range");
        } else {
            if (c.slot > eta)
                throw ProtocolError(where + ": slot out of range");
            if (b.slot_invalid(c.slot))
                throw ProtocolError(where + ": slot already invalid");
            if (!helper.count(c.tag))
                throw ProtocolError(where + ": no helper entry for keyword");
        }
    }

    DeletionReport report;
    report.cells = cells;
    for (const auto& c : cells) {
        auto& server = store.region(region_of_block(c.block, store.m()));
        server.update_block(c.tag, c.block, [&](EncryptedBlock& b) {
            if (b.kind == PayloadKind::BitVector) {
                // XOR masking carries a ciphertext bit flip through to the plaintext.
                flip_bit(b.user, c.slot);
                if (b.owner)
                    flip_bit(*b.owner, c.slot);
                ++report.bits_flipped;
                return;
            }
            const std::uint32_t before = b.signal.value_or(0);
            const auto v = static_cast<std::size_t>(std::popcount(before));
            b.signal = before | (std::uint32_t{1} << (c.slot - 1));
            ++report.slots_signaled;
            auto& h = helper.at(c.tag);
            if (h.reserved.count(c.block))
                return; // round 2 will notice the changed signal and abort
            if (v > 0)
                h.delta[v].erase(c.block);
            h.delta[v + 1].insert(c.block);
        });
    }
    return report;
}

// ---------------------------------------------------------------------------

AdditionState prepare_addition(std::vector<Document> docs, DocId first_id, const std::set<std::string>& existing_names,
                               const Tokenizer& tokenizer)
{
    AdditionState st;
    std::set<std::string> names;
    DocId next = first_id;
    for (auto& d : docs) {
        if (existing_names.count(d.name) || !names.insert(d.name).second)
            throw DomainError("document name already stored: " + d.name);
        d.id = next++;
        st.docs.groups.insert(d.group);
        st.docs.documents.push_back(std::move(d));
    }
    st.index = build_inverted_index(st.docs, tokenizer);
    return st;
}

AdditionRequest make_addition_request(AdditionState& state, const KeyRing& keys)
{
    AdditionRequest req;
    state.keyword_of.clear();
    for (const auto& [w, ids] : state.index.entries) {
        const Tag t = prf_tag(keys.tag, w);
        state.keyword_of.emplace(t, w);
        req.items.emplace_back(t, ids.size());
    }
    // Tag order, so the request reveals nothing about keyword order.
    std::sort(req.items.begin(), req.items.end());
    return req;
}

AdditionResponse serve_addition_request(const AdditionRequest& request, HelperIndex& helper, const RegionStore& store,
                                        std::size_t eta)
{
    std::set<Tag> tags;
    for (const auto& [tag, _] : request.items)
        if (!tags.insert(tag).second)
            throw ProtocolError("addition request repeats a keyword tag");

    AdditionResponse resp;
    for (const auto& [tag, need] : request.items) {
        auto [it, created] = helper.try_emplace(tag, eta, 0);
        auto& h = it->second;
        ServedItem item;
        item.tag = tag;
        item.counter = h.counter;
        std::uint64_t covered = 0;
        for (std::size_t v = h.delta.size() - 1; v >= 1 && covered < need; --v) {
            while (covered < need && !h.delta[v].empty()) {
                const std::uint32_t column = *h.delta[v].begin();
                h.delta[v].erase(h.delta[v].begin());
                auto block = store.region(region_of_block(column, store.m())).get_block(tag, column);
                h.reserved[column] = block.signal.value_or(0);
                item.blocks.push_back({column, block});
                covered += v;
            }
        }
        resp.items.push_back(std::move(item));
    }
    return resp;
}

EncryptedBlock ListEncryptor::encrypt(const Block& plain, std::uint32_t index) const
{
    if (auth)
        return encrypt_list_block_full(plain, *keys, *groups, id_bits, index, *oracle, *rng);
    EncryptedBlock b;
    b.index = index;
    b.kind = PayloadKind::List;
    b.user = mask_block(plain, keys->basic, index, *oracle).ciphertext;
    b.signal = 0;
    return b;
}

Block ListEncryptor::decrypt(const EncryptedBlock& block) const
{
    if (auth)
        return unmask_block({block.owner.value(), block.index}, keys->owner, *oracle);
    return unmask_block({block.user, block.index}, keys->basic, *oracle);
}

OwnerKeywordUpdate owner_build_update_blocks(const ServedItem& served, std::vector<DocId> new_ids,
                                             const ListEncryptor& enc)
{
    const std::size_t eta = kKappaBits / enc.id_bits;
    std::shuffle(new_ids.begin(), new_ids.end(), *enc.rng);

    OwnerKeywordUpdate out;
    out.update.tag = served.tag;
    std::uint64_t c = served.counter;
    std::size_t next = 0;

    for (const auto& sb : served.blocks) {
        if (sb.block.kind != PayloadKind::List)
            throw ProtocolError("only list blocks take part in additions");
        Block plain = enc.decrypt(sb.block);
        for (std::size_t x = 1; x <= eta; ++x) {
            if (!sb.block.slot_invalid(x))
                continue;
            if (next < new_ids.size()) {
                write_slot(plain, x, enc.id_bits, new_ids[next]);
                out.placements.push_back({new_ids[next], {sb.column, static_cast<std::uint32_t>(x)}});
                ++next;
            } else {
                write_slot(plain, x, enc.id_bits, 0);
            }
        }
        ++c;
        out.update.blocks.push_back({sb.column, enc.encrypt(plain, static_cast<std::uint32_t>(c)), false});
    }

    while (next < new_ids.size()) {
        Block plain{};
        ++c;
        const auto column = static_cast<std::uint32_t>(c);
        for (std::size_t x = 1; x <= eta && next < new_ids.size(); ++x, ++next) {
            write_slot(plain, x, enc.id_bits, new_ids[next]);
            out.placements.push_back({new_ids[next], {column, static_cast<std::uint32_t>(x)}});
        }
        out.update.blocks.push_back({column, enc.encrypt(plain, column), true});
    }
    if (c > kFakeField - 1)
        throw ProtocolError("block counter exhausted");
    out.update.new_counter = c;
    return out;
}

AdditionReport apply_addition(const std::vector<KeywordUpdate>& updates, RegionStore& store, HelperIndex& helper)
{
    std::set<Tag> tags;
    for (const auto& u : updates) {
        if (!tags.insert(u.tag).second)
            throw ProtocolError("addition repeats a keyword tag");
        auto it = helper.find(u.tag);
        if (it == helper.end())
            throw ProtocolError("addition for a keyword that was never requested");
        const auto& h = it->second;
        if (u.new_counter != h.counter + u.blocks.size())
            throw ProtocolError("counter desync: expected " + std::to_string(h.counter + u.blocks.size()) + ", got " +
                                std::to_string(u.new_counter));
        std::set<std::uint32_t> columns;
        for (const auto& ub : u.blocks) {
            if (!columns.insert(ub.column).second)
                throw ProtocolError("column collision at " + std::to_string(ub.column));
            if (ub.block.index <= h.counter || ub.block.index > u.new_counter)
                throw ProtocolError("stale oracle input " + std::to_string(ub.block.index));
            const unsigned region = region_of_block(ub.column, store.m());
            if (ub.fresh) {
                if (ub.column != ub.block.index)
                    throw ProtocolError("new block column must equal its index");
                bool exists = false;
                store.region(region).with_row(u.tag, [&](const Row& row) { exists = row.count(ub.column) != 0; });
                if (exists)
                    throw ProtocolError("column collision at " + std::to_string(ub.column));
                continue;
            }
            auto r = h.reserved.find(ub.column);
            if (r == h.reserved.end())
                throw ProtocolError("block " + std::to_string(ub.column) + " was not reserved in round 1");
            auto current = store.region(region).get_block(u.tag, ub.column);
            if (current.signal.value_or(0) != r->second)
                throw ProtocolError("block " + std::to_string(ub.column) + " changed since round 1");
        }
    }

    AdditionReport report;
    for (const auto& u : updates) {
        auto& h = helper.at(u.tag);
        if (!store.has_keyword(u.tag)) {
            for (unsigned j = 1; j <= store.m(); ++j)
                store.region(j).put_row(u.tag, {});
            report.new_rows += store.m();
        }
        for (const auto& ub : u.blocks) {
            store.region(region_of_block(ub.column, store.m())).put_block(u.tag, ub.column, ub.block);
            if (ub.fresh) {
                ++report.new_blocks;
            } else {
                h.reserved.erase(ub.column);
                ++report.reencrypted_blocks;
            }
        }
        h.counter = u.new_counter;
    }
    return report;
}

void release_reservations(const AdditionResponse& response, HelperIndex& helper, const RegionStore& store)
{
    for (const auto& item : response.items) {
        auto it = helper.find(item.tag);
        if (it == helper.end())
            continue;
        auto& h = it->second;
        for (const auto& sb : item.blocks) {
            if (!h.reserved.erase(sb.column))
                continue;
            auto b = store.region(region_of_block(sb.column, store.m())).get_block(item.tag, sb.column);
            const auto v = static_cast<std::size_t>(std::popcount(b.signal.value_or(0)));
            if (v > 0)
                h.delta[v].insert(sb.column);
        }
    }
}

} // namespace dsse
