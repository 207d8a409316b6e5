#pragma once

#include "dsse/crypto.hpp"
#include "dsse/region_store.hpp"
#include "dsse/secure_index.hpp"

#include <string>
#include <vector>

namespace dsse {

inline const GroupId kOwnerLabel = "owner";

struct Trapdoor
{
    Tag tag;
    OracleKey key;

    bool operator==(const Trapdoor&) const = default;
};

struct AuthComponent
{
    GroupId group;
    OracleKey key;

    bool operator==(const AuthComponent&) const = default;
};

struct AuthTrapdoor
{
    Tag tag;
    std::vector<AuthComponent> components;
    bool owner = false;

    bool operator==(const AuthTrapdoor&) const = default;
};

/// (E_w(w), Ψ_{K_p}(w))
Trapdoor make_trapdoor(const std::string& keyword, const KeyRing& keys);

/// One component per user group, or a single owner-key component when `owner`.
AuthTrapdoor make_auth_trapdoor(const std::string& keyword, const KeyRing& keys, const std::vector<GroupId>& user_groups,
                                bool owner = false);

/// One decrypted identifier with where it was found, as the server observes it.
struct Hit
{
    DocId id = 0;
    std::uint32_t column = 0;
    std::uint32_t slot = 0;
    GroupId group; // component that accepted it ("*" on the basic path)

    auto operator<=>(const Hit&) const = default;
};

struct PartialResult
{
    unsigned region = 0;
    std::vector<DocId> ids; // sorted, unique
    std::vector<Hit> hits;  // only when requested
};

struct RegionSearchOptions
{
    std::uint64_t n_setup = 0; // bit-vector length
    std::uint64_t n_total = 0; // range-check bound for list slots
    unsigned id_bits = 32;
    bool owner_part = false; // decrypt φ instead of π (owner queries in authorization mode)
    bool collect_hits = false;
};

PartialResult region_search(const RegionServer& server, const Trapdoor& td, const RandomOracle& oracle,
                            const RegionSearchOptions& opt);

PartialResult region_search_auth(const RegionServer& server, const AuthTrapdoor& td, const GroupMap& groups,
                                 const RandomOracle& oracle, const RegionSearchOptions& opt);

/// Sorted union; throws ProtocolError when two partials claim the same region.
std::vector<DocId> merge_results(const std::vector<PartialResult>& partials);

struct SearchOutcome
{
    std::vector<DocId> ids;
    std::vector<Hit> hits; // sorted
    bool indexed = false;  // a row exists for the tag
};

/// Scatters the trapdoor to every region and merges. Any region failure fails
/// the whole query.
SearchOutcome search_regions(Transport& transport, const RegionStore& store, const Trapdoor& td,
                             const RandomOracle& oracle, const RegionSearchOptions& opt);
SearchOutcome search_regions_auth(Transport& transport, const RegionStore& store, const AuthTrapdoor& td,
                                  const GroupMap& groups, const RandomOracle& oracle, const RegionSearchOptions& opt);

} // namespace dsse
