#include "dsse/search_engine.hpp"

#include "dsse/errors.hpp"

#include <algorithm>
#include <mutex>
#include <set>

namespace dsse {

namespace {

const GroupId kBasicLabel = "*";

void add_block_ids(const Block& plain, const EncryptedBlock& b, std::uint32_t column, const GroupId& label,
                   const RegionSearchOptions& opt, PartialResult& out)
{
    if (b.kind == PayloadKind::BitVector) {
        for (DocId id : bitvec_block_ids(plain, column, opt.n_setup)) {
            out.ids.push_back(id);
            if (opt.collect_hits)
                out.hits.push_back({id, column, static_cast<std::uint32_t>((id - 1) % kKappaBits + 1), label});
        }
        return;
    }
    const std::size_t cp = kKappaBits / opt.id_bits;
    for (std::size_t x = 1; x <= cp; ++x) {
        if (b.slot_invalid(x))
            continue;
        const DocId id = read_slot(plain, x, opt.id_bits);
        if (id == 0)
            continue;
        out.ids.push_back(id);
        if (opt.collect_hits)
            out.hits.push_back({id, column, static_cast<std::uint32_t>(x), label});
    }
}

void finish(PartialResult& r)
{
    std::sort(r.ids.begin(), r.ids.end());
    r.ids.erase(std::unique(r.ids.begin(), r.ids.end()), r.ids.end());
    std::sort(r.hits.begin(), r.hits.end());
}

} // namespace

Trapdoor make_trapdoor(const std::string& keyword, const KeyRing& keys)
{
    return {prf_tag(keys.tag, keyword), derive_oracle_key(keys.payload, keyword)};
}

AuthTrapdoor make_auth_trapdoor(const std::string& keyword, const KeyRing& keys, const std::vector<GroupId>& user_groups,
                                bool owner)
{
    AuthTrapdoor td;
    td.tag = prf_tag(keys.tag, keyword);
    td.owner = owner;
    if (owner) {
        td.components.push_back({kOwnerLabel, derive_oracle_key(keys.owner, keyword)});
        return td;
    }
    std::set<GroupId> seen;
    for (const auto& g : user_groups) {
        if (!seen.insert(g).second)
            continue;
        td.components.push_back({g, derive_oracle_key(keys.group(g).index, keyword)});
    }
    if (td.components.empty())
        throw DomainError("a user trapdoor needs at least one group");
    return td;
}

PartialResult region_search(const RegionServer& server, const Trapdoor& td, const RandomOracle& oracle,
                            const RegionSearchOptions& opt)
{
    PartialResult out;
    out.region = server.id();
    const GroupId& label = opt.owner_part ? kOwnerLabel : kBasicLabel;
    server.with_row(td.tag, [&](const Row& row) {
        OracleSession session(oracle, td.key);
        for (const auto& [column, b] : row) {
            // Signal array is consulted before decryption: a list block whose
            // slots are all invalid is skipped outright.
            if (b.kind == PayloadKind::List && b.invalid_count() == kKappaBits / opt.id_bits)
                continue;
            const Block& ct = opt.owner_part ? b.owner.value() : b.user;
            Block plain = xor_blocks(ct, session.block(b.index));
            add_block_ids(plain, b, column, label, opt, out);
        }
    });
    finish(out);
    return out;
}

PartialResult region_search_auth(const RegionServer& server, const AuthTrapdoor& td, const GroupMap& groups,
                                 const RandomOracle& oracle, const RegionSearchOptions& opt)
{
    if (td.owner) {
        if (td.components.size() != 1)
            throw DomainError("owner trapdoor carries exactly one component");
        RegionSearchOptions o = opt;
        o.owner_part = true;
        return region_search(server, Trapdoor{td.tag, td.components.front().key}, oracle, o);
    }

    PartialResult out;
    out.region = server.id();
    server.with_row(td.tag, [&](const Row& row) {
        std::vector<OracleSession> sessions;
        std::vector<int> group_index;
        sessions.reserve(td.components.size());
        for (const auto& c : td.components) {
            sessions.emplace_back(oracle, c.key);
            group_index.push_back(groups.index_of(c.group));
        }
        const std::size_t cp = kKappaBits / opt.id_bits;
        const std::size_t width = opt.id_bits / 8;
        std::vector<Block> pads(sessions.size());

        for (const auto& [column, b] : row) {
            if (b.kind == PayloadKind::List && b.invalid_count() == cp)
                continue;
            for (std::size_t k = 0; k < sessions.size(); ++k)
                pads[k] = sessions[k].block(b.index);

            if (b.kind == PayloadKind::List) {
                for (std::size_t x = 1; x <= cp; ++x) {
                    if (b.slot_invalid(x))
                        continue;
                    for (std::size_t k = 0; k < sessions.size(); ++k) {
                        if (group_index[k] == GroupMap::kNone)
                            continue;
                        DocId id = 0;
                        for (std::size_t i = (x - 1) * width; i < x * width; ++i)
                            id = (id << 8) | static_cast<std::uint8_t>(b.user[i] ^ pads[k][i]);
                        if (id < 1 || id > opt.n_total || groups.group_index(id) != group_index[k])
                            continue;
                        out.ids.push_back(id);
                        if (opt.collect_hits)
                            out.hits.push_back({id, column, static_cast<std::uint32_t>(x), td.components[k].group});
                        break;
                    }
                }
                continue;
            }

            // Bit-vector block: decrypt per component group, keep only bits
            // whose document belongs to that group; all other bits are zeroed.
            for (std::size_t k = 0; k < sessions.size(); ++k) {
                if (group_index[k] == GroupMap::kNone)
                    continue;
                Block plain = xor_blocks(b.user, pads[k]);
                for (DocId id : bitvec_block_ids(plain, column, opt.n_setup)) {
                    if (groups.group_index(id) != group_index[k])
                        continue;
                    out.ids.push_back(id);
                    if (opt.collect_hits)
                        out.hits.push_back({id, column, static_cast<std::uint32_t>((id - 1) % kKappaBits + 1),
                                            td.components[k].group});
                }
            }
        }
    });
    finish(out);
    return out;
}

std::vector<DocId> merge_results(const std::vector<PartialResult>& partials)
{
    std::set<unsigned> regions;
    std::vector<DocId> ids;
    for (const auto& p : partials) {
        if (!regions.insert(p.region).second)
            throw ProtocolError("duplicate partial result for region " + std::to_string(p.region));
        ids.insert(ids.end(), p.ids.begin(), p.ids.end());
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

namespace {

template <typename Fn>
SearchOutcome scatter_search(Transport& transport, const RegionStore& store, const Tag& tag, Fn&& fn)
{
    std::vector<unsigned> regions(store.m());
    for (unsigned j = 1; j <= store.m(); ++j)
        regions[j - 1] = j;
    std::vector<PartialResult> partials(store.m());
    transport.scatter(regions, [&](unsigned j, RegionServer& s) { partials[j - 1] = fn(s); });

    SearchOutcome out;
    out.ids = merge_results(partials);
    for (auto& p : partials)
        out.hits.insert(out.hits.end(), p.hits.begin(), p.hits.end());
    std::sort(out.hits.begin(), out.hits.end());
    out.indexed = store.has_keyword(tag);
    return out;
}

} // namespace

SearchOutcome search_regions(Transport& transport, const RegionStore& store, const Trapdoor& td,
                             const RandomOracle& oracle, const RegionSearchOptions& opt)
{
    return scatter_search(transport, store, td.tag,
                          [&](const RegionServer& s) { return region_search(s, td, oracle, opt); });
}

SearchOutcome search_regions_auth(Transport& transport, const RegionStore& store, const AuthTrapdoor& td,
                                  const GroupMap& groups, const RandomOracle& oracle, const RegionSearchOptions& opt)
{
    return scatter_search(transport, store, td.tag,
                          [&](const RegionServer& s) { return region_search_auth(s, td, groups, oracle, opt); });
}

} // namespace dsse
