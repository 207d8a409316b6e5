#pragma once

#include "dsse/config.hpp"
#include "dsse/corpus.hpp"
#include "dsse/crypto.hpp"
#include "dsse/payload.hpp"
#include "dsse/region_store.hpp"
#include "dsse/search_engine.hpp"
#include "dsse/secure_index.hpp"
#include "dsse/update_engine.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

namespace dsse {

/// Everything the server may know about the deployment.
struct PublicParams
{
    std::uint64_t n = 0;       // setup documents (bit-vector length)
    std::uint64_t n_total = 0; // highest id handed out so far
    unsigned id_bits = 32;
    std::uint64_t upsilon = 1;
    std::size_t avg_w = 6;
    unsigned m = 1;
    bool auth = false;

    std::size_t eta() const { return kKappaBits / id_bits; }
    BlockGeometry geometry() const { return {id_bits, n, upsilon}; }
    bool operator==(const PublicParams&) const = default;
};

struct StoredDocument
{
    DocId id = 0;
    GroupId group; // empty outside authorization mode
    Bytes ciphertext;

    bool operator==(const StoredDocument&) const = default;
};

struct UpdateRow
{
    DocId id = 0;
    UpdateIndexEntry entry;

    bool operator==(const UpdateRow&) const = default;
};

/// Owner -> server at setup.
struct SetupPackage
{
    PublicParams params;
    std::vector<EncryptedEntry> entries;
    std::vector<UpdateRow> update_rows;
    std::vector<StoredDocument> documents;
};

/// Owner -> server in round 2 of an addition.
struct AdditionCommit
{
    std::vector<KeywordUpdate> updates;
    std::vector<UpdateRow> update_rows;
    std::vector<StoredDocument> documents;
};

struct SearchResponse
{
    std::vector<DocId> ids;
    std::vector<StoredDocument> documents;
};

// ---------------------------------------------------------------------------

/// Data owner: holds every key plus the private placement map.
class Owner
{
public:
    Owner(EngineConfig config, KeyRing keys, Tokenizer tokenizer = default_tokenize);

    SetupPackage setup(const Corpus& corpus);
    /// Setup from explicit payloads (fixed layouts such as worked examples).
    /// Payloads must agree with the corpus' inverted index.
    SetupPackage setup_with_payloads(const Corpus& corpus, const std::map<std::string, PlainPayload>& payloads,
                                     const StorageParams& storage);

    Trapdoor trapdoor(const std::string& keyword) const;
    AuthTrapdoor owner_trapdoor(const std::string& keyword) const;

    DeletionToken deletion_token(const std::string& name) const;
    /// Drops the owner's bookkeeping for a document the server has deleted.
    void forget_document(const std::string& name);

    AdditionRequest begin_addition(std::vector<Document> docs);
    /// Builds round 2. Owner bookkeeping changes only after confirm_addition().
    AdditionCommit finish_addition(const AdditionResponse& response);
    void confirm_addition();
    /// Abandons a pending addition without committing it.
    void abort_addition();

    const EngineConfig& config() const { return config_; }
    const KeyRing& keys() const { return keys_; }
    const PublicParams& params() const { return params_; }
    const PlacementMap& placement() const { return placement_; }
    const GroupMap& groups() const { return groups_; }
    const std::map<std::string, DocId>& names() const { return names_; }
    const std::map<std::string, PlainPayload>& setup_payloads() const { return payloads_; }
    std::optional<DocId> id_of(const std::string& name) const;
    RandomOracle& search_oracle() { return os_; }
    RandomOracle& deletion_oracle() { return od_; }

    /// Owner placement snapshot (JSON).
    void save_state(const std::filesystem::path& path) const;
    static std::unique_ptr<Owner> load_state(const std::filesystem::path& path, EngineConfig config, KeyRing keys,
                            Tokenizer tokenizer = default_tokenize);

private:
    Bytes encrypt_body(const std::string& body, const GroupId& group);

    EngineConfig config_;
    KeyRing keys_;
    Tokenizer tokenizer_;
    RandomOracle os_{OracleLabel::Search};
    RandomOracle od_{OracleLabel::Deletion};
    std::unique_ptr<RandomSource> random_;
    std::mt19937_64 rng_;

    PublicParams params_;
    PlacementMap placement_;
    GroupMap groups_;
    std::map<std::string, DocId> names_;
    std::map<DocId, std::set<std::string>> doc_keywords_;
    std::map<std::string, PlainPayload> payloads_;
    std::optional<AdditionState> pending_;

    struct PendingCommit
    {
        PlacementMap placement; // new documents only
        GroupMap groups;
        std::vector<std::pair<std::string, DocId>> names;
        std::vector<std::pair<DocId, std::set<std::string>>> doc_keywords;
        std::uint64_t n_total = 0;
    };
    std::optional<PendingCommit> commit_;
};

// ---------------------------------------------------------------------------

/// What the server saw during one operation; consumed by the auditor.
struct SearchObservation
{
    Tag tag;
    std::vector<GroupId> token_groups; // component labels; "*" in the basic scheme
    bool owner = false;
    bool indexed = false;
    int payload_type = 0; // 0 absent, 1 bit vector, 2 list only
    std::vector<Hit> hits;
    std::vector<DocId> returned;
};

struct DeleteObservation
{
    Tag doc_tag;
    DocId id = 0;
    std::size_t ciphertext_bytes = 0;
    std::size_t cell_count = 0;                   // including fakes
    std::vector<std::pair<AddressCell, PayloadKind>> cells; // real cells
};

struct AddObservation
{
    AdditionRequest request;
    std::vector<std::pair<Tag, int>> prior_types; // payload type of each tag before the addition
    std::vector<std::pair<Tag, std::size_t>> served_blocks;
    std::vector<std::tuple<DocId, std::size_t, GroupId>> documents; // id, |C|, group
    std::vector<std::pair<Tag, std::vector<std::uint32_t>>> columns; // columns written per tag
};

using Observation = std::variant<SearchObservation, DeleteObservation, AddObservation>;

struct ServerOptions
{
    std::optional<std::uint32_t> latency_us; // loopback transport when set
    std::optional<unsigned> threads;         // region worker count, default m
    bool observe = true;                     // keep an observation log (auditing)
};

class CloudServer
{
public:
    explicit CloudServer(const SetupPackage& setup, ServerOptions options = {});
    ~CloudServer();

    SearchResponse search(const Trapdoor& td);
    SearchResponse search(const AuthTrapdoor& td);

    DeletionReport remove(const DeletionToken& token);

    AdditionResponse serve_addition(const AdditionRequest& request);
    AdditionReport commit_addition(const AdditionCommit& commit);
    void abandon_addition(const AdditionResponse& response);

    const PublicParams& params() const { return params_; }
    RegionStore& store() { return *store_; }
    const RegionStore& store() const { return *store_; }
    const HelperIndex& helper() const { return helper_; }
    const std::map<Tag, UpdateRow>& update_index() const { return update_index_; }
    const std::map<DocId, StoredDocument>& documents() const { return documents_; }
    const GroupMap& groups() const { return groups_; }
    const RandomOracle& search_oracle() const { return os_; }
    RandomOracle& search_oracle() { return os_; }
    RandomOracle& deletion_oracle() { return od_; }
    Transport& transport() { return *transport_; }
    LoopbackTransport* loopback() { return loopback_; }

    const std::vector<Observation>& observations() const { return log_; }
    void clear_observations() { log_.clear(); }

    /// Snapshot of the search index, update index, helper index, documents
    /// and public parameters; iteration order is deterministic.
    void save(const std::filesystem::path& path) const;
    Bytes snapshot_bytes() const;
    static std::unique_ptr<CloudServer> load(const std::filesystem::path& path, ServerOptions options = {});
    static std::unique_ptr<CloudServer> from_snapshot(Bytes data, ServerOptions options = {});

    /// Total encoded size of all search-index blocks.
    std::size_t index_bytes() const;

    /// 0 if the tag has no row, 1 if any of its blocks is a bit vector, 2 otherwise.
    int payload_type(const Tag& tag) const;

private:
    CloudServer(PublicParams params, ServerOptions options);
    void init_transport();
    SearchResponse respond(const SearchOutcome& outcome) const;

    PublicParams params_;
    ServerOptions options_;
    std::unique_ptr<RegionStore> store_;
    std::unique_ptr<Transport> transport_;
    LoopbackTransport* loopback_ = nullptr;
    RandomOracle os_{OracleLabel::Search};
    RandomOracle od_{OracleLabel::Deletion};

    std::mutex helper_mu_;
    HelperIndex helper_;
    std::map<Tag, UpdateRow> update_index_;
    std::map<DocId, StoredDocument> documents_;
    GroupMap groups_;

    std::mutex log_mu_;
    std::vector<Observation> log_;
    std::optional<AdditionRequest> pending_request_;
    std::vector<std::pair<Tag, std::size_t>> pending_served_;
    std::vector<std::pair<Tag, int>> pending_types_;
};

// ---------------------------------------------------------------------------

/// Keys a user holds: the tag key, its groups' keys and (basic scheme) the
/// shared payload and collection keys.
KeyRing user_keyring(const KeyRing& full, const std::vector<GroupId>& groups, bool auth);

class User
{
public:
    User(KeyRing keys, std::vector<GroupId> groups, bool auth);

    Trapdoor trapdoor(const std::string& keyword) const;
    AuthTrapdoor auth_trapdoor(const std::string& keyword) const;

    /// Decrypts every returned document with the key of its group.
    std::map<DocId, std::string> decrypt(const SearchResponse& response) const;

    const std::vector<GroupId>& groups() const { return groups_; }

private:
    KeyRing keys_;
    std::vector<GroupId> groups_;
    bool auth_;
};

} // namespace dsse
