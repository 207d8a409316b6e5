#include "dsse/system.hpp"

#include "dsse/errors.hpp"
#include "dsse/records.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>

namespace dsse {

namespace {

Bytes tag_field(const Tag& t)
{
    return Bytes(t.bytes.begin(), t.bytes.end());
}

Tag as_tag(const Bytes& b)
{
    if (b.size() != 32)
        throw DecodeError("expected a 32-byte tag");
    return fixed_from_view<KeywordTagTag>(b);
}

std::size_t stored_length(const StoredDocument& d)
{
    return d.ciphertext.size();
}

} // namespace

// ---------------------------------------------------------------------------
// Owner
// ---------------------------------------------------------------------------

Owner::Owner(EngineConfig config, KeyRing keys, Tokenizer tokenizer)
    : config_(std::move(config)), keys_(std::move(keys)), tokenizer_(std::move(tokenizer)),
      random_(make_random(config_.seed, "owner-documents")),
      rng_(config_.seed ? *config_.seed : std::random_device{}())
{
    config_.validate();
    params_.id_bits = config_.id_bits;
    params_.avg_w = config_.avg_w;
    params_.m = config_.m;
    params_.auth = config_.auth;
}

Bytes Owner::encrypt_body(const std::string& body, const GroupId& group)
{
    const SecretKey& key = config_.auth ? keys_.group(group).collection : keys_.collection;
    return encrypt_document(key, ByteView(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()), *random_);
}

SetupPackage Owner::setup(const Corpus& corpus)
{
    corpus.validate();
    const auto index = build_inverted_index(corpus, tokenizer_);
    StorageParams sp;
    sp.n = corpus.n();
    sp.z = index.z();
    sp.id_bits = config_.id_bits;
    if (config_.upsilon_override)
        sp.upsilon = *config_.upsilon_override;
    else
        sp.upsilon = (sp.n > 0 && sp.z > 0) ? optimal_upsilon(sp.n, sp.z, sp.id_bits) : 1;
    sp.validate(sp.n);

    std::map<std::string, PlainPayload> payloads;
    for (const auto& [w, ids] : index.entries)
        payloads.emplace(w, build_payload(ids, sp, rng_));
    return setup_with_payloads(corpus, payloads, sp);
}

SetupPackage Owner::setup_with_payloads(const Corpus& corpus, const std::map<std::string, PlainPayload>& payloads,
                                        const StorageParams& storage)
{
    corpus.validate();
    storage.validate(corpus.n());
    if (storage.n != corpus.n())
        throw DomainError("storage parameters disagree with the corpus size");
    if (storage.id_bits != config_.id_bits)
        throw DomainError("storage id width disagrees with the engine config");
    if (config_.auth)
        for (const auto& g : corpus.groups)
            (void)keys_.group(g);

    params_.n = storage.n;
    params_.n_total = storage.n;
    params_.upsilon = storage.upsilon;
    const auto geom = params_.geometry();

    // Payload shape and content must match the plaintext index exactly.
    const auto index = build_inverted_index(corpus, tokenizer_);
    for (const auto& [w, ids] : index.entries)
        if (!payloads.count(w))
            throw DomainError("no payload for keyword '" + w + "'");
    for (const auto& [w, p] : payloads) {
        if (p.kind == PayloadKind::BitVector ? p.bits.size() != geom.n : p.ids.size() != geom.upsilon)
            throw DomainError("payload for '" + w + "' has the wrong size");
        std::vector<DocId> got;
        for (const auto& [id, _] : payload_placements(p, geom))
            got.push_back(id);
        std::sort(got.begin(), got.end());
        const auto* expect = index.find(w);
        if (got != (expect ? *expect : std::vector<DocId>{}))
            throw DomainError("payload for '" + w + "' does not match the inverted index");
    }

    payloads_ = payloads;
    placement_ = placements_from_payloads(payloads, geom);
    groups_ = GroupMap{};
    names_.clear();
    doc_keywords_.clear();
    for (const auto& d : corpus.documents) {
        groups_.assign(d.id, d.group);
        names_[d.name] = d.id;
        doc_keywords_[d.id] = extract_keywords(d.body, tokenizer_);
    }

    SetupPackage pkg;
    pkg.params = params_;
    pkg.entries.reserve(payloads.size());
    for (const auto& [w, p] : payloads) {
        if (config_.auth)
            pkg.entries.push_back(encrypt_entry_auth(w, p, keys_, geom, groups_, os_, rng_));
        else
            pkg.entries.push_back(encrypt_entry_basic(w, p, keys_, geom, os_));
    }

    auto upd = build_update_index(corpus, placement_, keys_, config_.avg_w, od_, tokenizer_);
    for (const auto& d : corpus.documents) {
        pkg.update_rows.push_back({d.id, std::move(upd.entries.at(d.id))});
        const auto& body = upd.bodies.at(d.id);
        pkg.documents.push_back({d.id, config_.auth ? d.group : GroupId{}, encrypt_body(body, d.group)});
    }
    return pkg;
}

Trapdoor Owner::trapdoor(const std::string& keyword) const
{
    return make_trapdoor(keyword, keys_);
}

AuthTrapdoor Owner::owner_trapdoor(const std::string& keyword) const
{
    return make_auth_trapdoor(keyword, keys_, {}, true);
}

DeletionToken Owner::deletion_token(const std::string& name) const
{
    return make_deletion_token(name, keys_);
}

std::optional<DocId> Owner::id_of(const std::string& name) const
{
    auto it = names_.find(name);
    if (it == names_.end())
        return std::nullopt;
    return it->second;
}

void Owner::forget_document(const std::string& name)
{
    auto it = names_.find(name);
    if (it == names_.end())
        return;
    const DocId id = it->second;
    for (const auto& w : doc_keywords_[id]) {
        auto p = placement_.find(w);
        if (p != placement_.end())
            p->second.erase(id);
    }
    doc_keywords_.erase(id);
    groups_.erase(id);
    names_.erase(it);
}

AdditionRequest Owner::begin_addition(std::vector<Document> docs)
{
    std::set<std::string> existing;
    for (const auto& [name, _] : names_)
        existing.insert(name);
    for (const auto& d : docs) {
        if (config_.auth)
            (void)keys_.group(d.group);
        if (!is_valid_utf8(d.body))
            throw DecodeError("document '" + d.name + "' is not valid UTF-8");
    }
    auto state = prepare_addition(std::move(docs), params_.n_total + 1, existing, tokenizer_);
    state.docs.groups.clear();
    auto req = make_addition_request(state, keys_);
    pending_ = std::move(state);
    commit_.reset();
    return req;
}

AdditionCommit Owner::finish_addition(const AdditionResponse& response)
{
    if (!pending_)
        throw ProtocolError("no addition in progress");
    const auto& st = *pending_;

    std::set<Tag> requested;
    for (const auto& [t, _] : st.keyword_of)
        requested.insert(t);
    std::set<Tag> answered;
    for (const auto& item : response.items)
        if (!answered.insert(item.tag).second)
            throw ProtocolError("addition response repeats a keyword tag");
    if (answered != requested)
        throw ProtocolError("addition response does not match the request");

    PendingCommit next;
    next.groups = groups_;
    next.n_total = params_.n_total;
    for (const auto& d : st.docs.documents) {
        next.groups.assign(d.id, d.group);
        next.n_total = std::max(next.n_total, d.id);
    }

    AdditionCommit commit;
    for (const auto& item : response.items) {
        const auto& w = st.keyword_of.at(item.tag);
        const auto kk = keyword_keys(keys_, w);
        ListEncryptor enc;
        enc.auth = config_.auth;
        enc.id_bits = config_.id_bits;
        enc.keys = &kk;
        enc.groups = &next.groups;
        enc.oracle = &os_;
        enc.rng = &rng_;
        auto built = owner_build_update_blocks(item, st.index.entries.at(w), enc);
        auto& slots = next.placement[w];
        for (const auto& [id, loc] : built.placements)
            slots[id] = loc;
        commit.updates.push_back(std::move(built.update));
    }

    for (const auto& d : st.docs.documents) {
        auto kws = extract_keywords(d.body, tokenizer_);
        auto cells = document_cells(d.id, kws, next.placement, keys_.tag);
        std::string body = d.body;
        body.resize(padded_length(body.size(), cells.size(), config_.avg_w), ' ');
        commit.update_rows.push_back(
            {d.id, encrypt_update_entry(d.name, std::move(cells), body.size(), config_.avg_w, keys_, od_)});
        commit.documents.push_back({d.id, config_.auth ? d.group : GroupId{}, encrypt_body(body, d.group)});
        next.names.emplace_back(d.name, d.id);
        next.doc_keywords.emplace_back(d.id, std::move(kws));
    }
    commit_ = std::move(next);
    return commit;
}

void Owner::confirm_addition()
{
    if (!commit_)
        throw ProtocolError("no addition to confirm");
    for (auto& [w, slots] : commit_->placement)
        for (const auto& [id, loc] : slots)
            placement_[w][id] = loc;
    groups_ = std::move(commit_->groups);
    for (const auto& [name, id] : commit_->names)
        names_[name] = id;
    for (auto& [id, kws] : commit_->doc_keywords)
        doc_keywords_[id] = std::move(kws);
    params_.n_total = commit_->n_total;
    commit_.reset();
    pending_.reset();
}

void Owner::abort_addition()
{
    commit_.reset();
    pending_.reset();
}

void Owner::save_state(const std::filesystem::path& path) const
{
    nlohmann::json j;
    j["n"] = params_.n;
    j["n_total"] = params_.n_total;
    j["upsilon"] = params_.upsilon;
    auto& docs = j["documents"] = nlohmann::json::array();
    for (const auto& [name, id] : names_) {
        nlohmann::json d;
        d["name"] = name;
        d["id"] = id;
        d["group"] = groups_.group_of(id).value_or(kDefaultGroup);
        d["keywords"] = doc_keywords_.count(id) ? doc_keywords_.at(id) : std::set<std::string>{};
        docs.push_back(std::move(d));
    }
    auto& pl = j["placement"] = nlohmann::json::object();
    for (const auto& [w, slots] : placement_) {
        auto& arr = pl[w] = nlohmann::json::array();
        for (const auto& [id, loc] : slots)
            arr.push_back({id, loc.block, loc.slot});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out << j.dump(1) << "\n";
}

std::unique_ptr<Owner> Owner::load_state(const std::filesystem::path& path, EngineConfig config, KeyRing keys, Tokenizer tokenizer)
{
    std::ifstream in(path);
    if (!in)
        throw NotFound("cannot read owner state " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("owner state: ") + e.what());
    }
    auto o = std::make_unique<Owner>(std::move(config), std::move(keys), std::move(tokenizer));
    try {
        o->params_.n = j.at("n").get<std::uint64_t>();
        o->params_.n_total = j.at("n_total").get<std::uint64_t>();
        o->params_.upsilon = j.at("upsilon").get<std::uint64_t>();
        for (const auto& d : j.at("documents")) {
            const DocId id = d.at("id").get<DocId>();
            o->names_[d.at("name").get<std::string>()] = id;
            o->groups_.assign(id, d.at("group").get<std::string>());
            o->doc_keywords_[id] = d.at("keywords").get<std::set<std::string>>();
        }
        for (const auto& [w, arr] : j.at("placement").items()) {
            auto& slots = o->placement_[w];
            for (const auto& e : arr)
                slots[e.at(0).get<DocId>()] = Location{e.at(1).get<std::uint32_t>(), e.at(2).get<std::uint32_t>()};
        }
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("owner state: ") + e.what());
    }
    return o;
}

// ---------------------------------------------------------------------------
// Cloud server
// ---------------------------------------------------------------------------

CloudServer::CloudServer(PublicParams params, ServerOptions options)
    : params_(params), options_(options), store_(std::make_unique<RegionStore>(params.m))
{
    init_transport();
}

CloudServer::CloudServer(const SetupPackage& setup, ServerOptions options) : CloudServer(setup.params, options)
{
    for (const auto& e : setup.entries) {
        store_->put_entry(e);
        helper_.try_emplace(e.tag, params_.eta(), e.blocks.size());
    }
    for (const auto& r : setup.update_rows)
        if (!update_index_.emplace(r.entry.doc_tag, r).second)
            throw ProtocolError("duplicate update-index row");
    for (const auto& d : setup.documents) {
        documents_[d.id] = d;
        if (params_.auth)
            groups_.assign(d.id, d.group);
    }
}

CloudServer::~CloudServer() = default;

void CloudServer::init_transport()
{
    if (options_.latency_us) {
        auto lt = std::make_unique<LoopbackTransport>(*store_, std::chrono::microseconds(*options_.latency_us));
        loopback_ = lt.get();
        transport_ = std::move(lt);
    } else {
        transport_ = std::make_unique<DirectTransport>(*store_, options_.threads.value_or(params_.m));
    }
}

SearchResponse CloudServer::respond(const SearchOutcome& outcome) const
{
    SearchResponse r;
    r.ids = outcome.ids;
    for (DocId id : outcome.ids) {
        auto it = documents_.find(id);
        if (it != documents_.end())
            r.documents.push_back(it->second);
    }
    return r;
}

SearchResponse CloudServer::search(const Trapdoor& td)
{
    if (params_.auth)
        throw ProtocolError("authorization mode needs an authorization trapdoor");
    std::shared_lock lock(store_->master_lock());
    RegionSearchOptions opt{params_.n, params_.n_total, params_.id_bits, false, options_.observe};
    auto outcome = search_regions(*transport_, *store_, td, os_, opt);
    auto resp = respond(outcome);
    if (options_.observe) {
        SearchObservation o{td.tag, {"*"}, false, outcome.indexed, payload_type(td.tag), std::move(outcome.hits),
                            resp.ids};
        std::lock_guard g(log_mu_);
        log_.push_back(std::move(o));
    }
    return resp;
}

SearchResponse CloudServer::search(const AuthTrapdoor& td)
{
    if (!params_.auth)
        throw ProtocolError("basic mode takes single-key trapdoors");
    std::shared_lock lock(store_->master_lock());
    RegionSearchOptions opt{params_.n, params_.n_total, params_.id_bits, false, options_.observe};
    auto outcome = search_regions_auth(*transport_, *store_, td, groups_, os_, opt);
    auto resp = respond(outcome);
    if (options_.observe) {
        SearchObservation o;
        o.tag = td.tag;
        for (const auto& c : td.components)
            o.token_groups.push_back(c.group);
        o.owner = td.owner;
        o.indexed = outcome.indexed;
        o.payload_type = payload_type(td.tag);
        o.hits = std::move(outcome.hits);
        o.returned = resp.ids;
        std::lock_guard g(log_mu_);
        log_.push_back(std::move(o));
    }
    return resp;
}

DeletionReport CloudServer::remove(const DeletionToken& token)
{
    std::unique_lock lock(store_->master_lock());
    auto row = update_index_.find(token.doc_tag);
    if (row == update_index_.end())
        throw NotFound("no update-index entry for this token");
    const DocId id = row->second.id;
    auto doc = documents_.find(id);
    if (doc == documents_.end())
        throw ProtocolError("update-index row points at a missing document");
    const std::size_t clen = stored_length(doc->second);
    const std::size_t expect = xi(clen - kDocumentHeaderBytes, params_.avg_w);
    if (row->second.entry.cells.size() != expect)
        throw ProtocolError("update-index entry size disagrees with the ciphertext length");

    auto cells = extract_addresses(token, row->second.entry, od_);
    auto report = apply_deletion(cells, *store_, helper_, params_.eta());

    if (options_.observe) {
        DeleteObservation o;
        o.doc_tag = token.doc_tag;
        o.id = id;
        o.ciphertext_bytes = clen;
        o.cell_count = row->second.entry.cells.size();
        for (const auto& c : cells)
            o.cells.push_back({c, store_->region(region_of_block(c.block, params_.m)).get_block(c.tag, c.block).kind});
        std::lock_guard g(log_mu_);
        log_.push_back(std::move(o));
    }
    update_index_.erase(row);
    documents_.erase(doc);
    groups_.erase(id);
    return report;
}

AdditionResponse CloudServer::serve_addition(const AdditionRequest& request)
{
    std::shared_lock lock(store_->master_lock());
    std::lock_guard hl(helper_mu_);
    pending_types_.clear();
    if (options_.observe)
        for (const auto& [tag, _] : request.items)
            pending_types_.emplace_back(tag, payload_type(tag));
    auto resp = serve_addition_request(request, helper_, *store_, params_.eta());
    pending_request_ = request;
    pending_served_.clear();
    for (const auto& item : resp.items)
        pending_served_.emplace_back(item.tag, item.blocks.size());
    return resp;
}

AdditionReport CloudServer::commit_addition(const AdditionCommit& commit)
{
    std::unique_lock lock(store_->master_lock());
    std::set<DocId> ids;
    std::set<Tag> doc_tags;
    for (const auto& d : commit.documents) {
        if (d.id == 0 || documents_.count(d.id) || !ids.insert(d.id).second)
            throw ProtocolError("document id " + std::to_string(d.id) + " already in use");
        if (d.ciphertext.size() < kDocumentHeaderBytes)
            throw ProtocolError("document ciphertext too short");
        if (params_.id_bits < 64 && d.id >= (std::uint64_t{1} << params_.id_bits))
            throw ProtocolError("document id exceeds the identifier width");
    }
    for (const auto& r : commit.update_rows) {
        if (update_index_.count(r.entry.doc_tag) || !doc_tags.insert(r.entry.doc_tag).second)
            throw ProtocolError("update-index row already exists");
        if (!ids.count(r.id))
            throw ProtocolError("update-index row for an unknown document");
    }
    if (doc_tags.size() != ids.size())
        throw ProtocolError("every new document needs exactly one update-index row");

    auto report = apply_addition(commit.updates, *store_, helper_);
    for (const auto& d : commit.documents) {
        documents_[d.id] = d;
        if (params_.auth)
            groups_.assign(d.id, d.group);
        params_.n_total = std::max(params_.n_total, d.id);
    }
    for (const auto& r : commit.update_rows)
        update_index_.emplace(r.entry.doc_tag, r);

    if (options_.observe) {
        AddObservation o;
        o.request = pending_request_.value_or(AdditionRequest{});
        o.prior_types = pending_types_;
        o.served_blocks = pending_served_;
        for (const auto& d : commit.documents)
            o.documents.emplace_back(d.id, d.ciphertext.size(), d.group);
        for (const auto& u : commit.updates) {
            std::vector<std::uint32_t> cols;
            for (const auto& b : u.blocks)
                cols.push_back(b.column);
            o.columns.emplace_back(u.tag, std::move(cols));
        }
        std::lock_guard g(log_mu_);
        log_.push_back(std::move(o));
    }
    pending_request_.reset();
    pending_served_.clear();
    return report;
}

void CloudServer::abandon_addition(const AdditionResponse& response)
{
    std::unique_lock lock(store_->master_lock());
    release_reservations(response, helper_, *store_);
    pending_request_.reset();
    pending_served_.clear();
}

int CloudServer::payload_type(const Tag& tag) const
{
    bool any_row = false;
    bool bitvec = false;
    for (unsigned j = 1; j <= store_->m() && !bitvec; ++j)
        store_->region(j).with_row(tag, [&](const Row& row) {
            any_row = true;
            for (const auto& [_, b] : row)
                if (b.kind == PayloadKind::BitVector)
                    bitvec = true;
        });
    return bitvec ? 1 : any_row ? 2 : 0;
}

std::size_t CloudServer::index_bytes() const
{
    std::size_t total = 0;
    for (unsigned j = 1; j <= store_->m(); ++j)
        store_->region(j).for_each([&](const Tag&, const Row& row) {
            for (const auto& [_, b] : row)
                total += encoded_block_size(b.owner.has_value(), b.signal.has_value(), params_.eta());
        });
    return total;
}

Bytes CloudServer::snapshot_bytes() const
{
    std::shared_lock lock(store_->master_lock());
    RecordWriter w;
    w.section("META", {{field_u64(params_.n), field_u64(params_.n_total), field_u64(params_.id_bits),
                        field_u64(params_.upsilon), field_u64(params_.avg_w), field_u64(params_.m),
                        field_u64(params_.auth ? 1 : 0)}});

    std::vector<Record> sidx;
    for (unsigned j = 1; j <= store_->m(); ++j)
        store_->region(j).for_each([&](const Tag& tag, const Row& row) {
            const Bytes key = row_key(j, tag);
            if (row.empty())
                sidx.push_back({key});
            for (const auto& [col, b] : row)
                sidx.push_back({key, field_u64(col), encode_block(b, params_.eta())});
        });
    w.section("SIDX", sidx);

    std::vector<Record> uidx;
    for (const auto& [tag, r] : update_index_) {
        Record rec{tag_field(tag), field_u64(r.id)};
        for (const auto& c : r.entry.cells)
            rec.push_back(c);
        uidx.push_back(std::move(rec));
    }
    w.section("UIDX", uidx);

    std::vector<Record> help;
    for (const auto& [tag, h] : helper_) {
        Record rec{tag_field(tag), field_u64(h.counter)};
        for (std::size_t v = 1; v < h.delta.size(); ++v) {
            Bytes cols;
            for (auto c : h.delta[v])
                put_be32(cols, c);
            rec.push_back(std::move(cols));
        }
        Bytes reserved;
        for (const auto& [c, sig] : h.reserved) {
            put_be32(reserved, c);
            put_be32(reserved, sig);
        }
        rec.push_back(std::move(reserved));
        help.push_back(std::move(rec));
    }
    w.section("HELP", help);

    std::vector<Record> docs;
    for (const auto& [id, d] : documents_)
        docs.push_back({field_u64(id), field(d.group), d.ciphertext});
    w.section("DOCS", docs);
    return w.bytes();
}

void CloudServer::save(const std::filesystem::path& path) const
{
    const Bytes data = snapshot_bytes();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

std::unique_ptr<CloudServer> CloudServer::load(const std::filesystem::path& path, ServerOptions options)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw NotFound("cannot read snapshot " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_snapshot(std::move(data), options);
}

std::unique_ptr<CloudServer> CloudServer::from_snapshot(Bytes data, ServerOptions options)
{
    RecordReader r(std::move(data));
    auto meta = r.section("META");
    if (meta.size() != 1 || meta[0].size() != 7)
        throw DecodeError("bad META section");
    PublicParams p;
    p.n = as_u64(meta[0][0]);
    p.n_total = as_u64(meta[0][1]);
    p.id_bits = static_cast<unsigned>(as_u64(meta[0][2]));
    p.upsilon = as_u64(meta[0][3]);
    p.avg_w = as_u64(meta[0][4]);
    p.m = static_cast<unsigned>(as_u64(meta[0][5]));
    p.auth = as_u64(meta[0][6]) != 0;
    if (p.m < 1 || p.m > kMaxRegions || (p.id_bits != 16 && p.id_bits != 32 && p.id_bits != 64) || p.avg_w == 0)
        throw DecodeError("bad META values");

    std::unique_ptr<CloudServer> s(new CloudServer(p, options));
    for (const auto& rec : r.section("SIDX")) {
        if (rec.size() != 1 && rec.size() != 3)
            throw DecodeError("bad SIDX record");
        auto [region, tag] = parse_row_key(rec[0]);
        if (region > p.m)
            throw DecodeError("SIDX row names a region beyond m");
        auto& server = s->store_->region(region);
        if (rec.size() == 1) {
            server.put_row(tag, {});
            continue;
        }
        const auto col = static_cast<std::uint32_t>(as_u64(rec[1]));
        if (region_of_block(col, p.m) != region)
            throw DecodeError("SIDX block stored in the wrong region");
        server.put_block(tag, col, decode_block(rec[2]));
    }
    for (const auto& rec : r.section("UIDX")) {
        if (rec.size() < 2)
            throw DecodeError("bad UIDX record");
        UpdateRow row;
        row.entry.doc_tag = as_tag(rec[0]);
        row.id = as_u64(rec[1]);
        for (std::size_t k = 2; k < rec.size(); ++k) {
            if (rec[k].size() != kAddressCellBytes)
                throw DecodeError("bad update-index cell");
            row.entry.cells.push_back(rec[k]);
        }
        s->update_index_.emplace(row.entry.doc_tag, std::move(row));
    }
    const std::size_t eta = p.eta();
    for (const auto& rec : r.section("HELP")) {
        if (rec.size() != eta + 3)
            throw DecodeError("bad HELP record");
        HelperEntry h(eta, as_u64(rec[1]));
        for (std::size_t v = 1; v <= eta; ++v) {
            if (rec[v + 1].size() % 4)
                throw DecodeError("bad HELP column list");
            for (std::size_t i = 0; i < rec[v + 1].size(); i += 4)
                h.delta[v].insert(get_be32(rec[v + 1], i));
        }
        const auto& res = rec[eta + 2];
        if (res.size() % 8)
            throw DecodeError("bad HELP reservation list");
        for (std::size_t i = 0; i < res.size(); i += 8)
            h.reserved[get_be32(res, i)] = get_be32(res, i + 4);
        s->helper_.emplace(as_tag(rec[0]), std::move(h));
    }
    for (const auto& rec : r.section("DOCS")) {
        if (rec.size() != 3)
            throw DecodeError("bad DOCS record");
        StoredDocument d{as_u64(rec[0]), as_string(rec[1]), rec[2]};
        if (p.auth)
            s->groups_.assign(d.id, d.group);
        s->documents_[d.id] = std::move(d);
    }
    if (!r.done())
        throw DecodeError("trailing data after snapshot");
    return s;
}

// ---------------------------------------------------------------------------
// Users
// ---------------------------------------------------------------------------

KeyRing user_keyring(const KeyRing& full, const std::vector<GroupId>& groups, bool auth)
{
    KeyRing k;
    k.tag = full.tag;
    if (!auth) {
        k.payload = full.payload;
        k.collection = full.collection;
        return k;
    }
    for (const auto& g : groups)
        k.groups[g] = full.group(g);
    return k;
}

User::User(KeyRing keys, std::vector<GroupId> groups, bool auth)
    : keys_(std::move(keys)), groups_(std::move(groups)), auth_(auth)
{
}

Trapdoor User::trapdoor(const std::string& keyword) const
{
    return make_trapdoor(keyword, keys_);
}

AuthTrapdoor User::auth_trapdoor(const std::string& keyword) const
{
    return make_auth_trapdoor(keyword, keys_, groups_);
}

std::map<DocId, std::string> User::decrypt(const SearchResponse& response) const
{
    std::map<DocId, std::string> out;
    for (const auto& d : response.documents) {
        const SecretKey& key = auth_ ? keys_.group(d.group).collection : keys_.collection;
        auto plain = decrypt_document(key, d.ciphertext);
        out[d.id] = std::string(plain.begin(), plain.end());
    }
    return out;
}

} // namespace dsse
