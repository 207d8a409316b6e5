#include "dsse/leakage.hpp"

#include "dsse/errors.hpp"
#include "dsse/protocol.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace dsse {

namespace {

const GroupId kBasic = "*";

std::string join(const std::vector<std::string>& parts, const char* sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += sep;
        out += parts[i];
    }
    return out;
}

std::vector<GroupId> sorted_unique(std::vector<GroupId> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

int type_of(PayloadKind k)
{
    return k == PayloadKind::BitVector ? 1 : 2;
}

} // namespace

// ---------------------------------------------------------------------------
// Histories
// ---------------------------------------------------------------------------

std::set<GroupId> History::all_groups() const
{
    std::set<GroupId> out = corpus.groups;
    for (const auto& d : corpus.documents)
        out.insert(d.group);
    for (const auto& op : ops) {
        for (const auto& g : op.groups)
            out.insert(g);
        for (const auto& d : op.docs)
            out.insert(d.group);
    }
    return out;
}

History parse_history(std::string_view text)
{
    History h;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw DecodeError("history line " + std::to_string(lineno) + ": " + msg);
    };
    auto read_doc = [&](std::istringstream& ls) {
        Document d;
        if (!(ls >> d.name >> d.group))
            fail("expected <name> <group> <body>");
        std::getline(ls, d.body);
        if (!d.body.empty() && d.body.front() == ' ')
            d.body.erase(0, 1);
        return d;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream ls(line);
        std::string verb;
        if (!(ls >> verb) || verb.front() == '#')
            continue;
        if (verb == "doc") {
            if (!h.ops.empty())
                fail("setup documents must come before operations");
            auto d = read_doc(ls);
            d.id = h.corpus.documents.size() + 1;
            h.corpus.groups.insert(d.group);
            h.corpus.documents.push_back(std::move(d));
        } else if (verb == "search") {
            Operation op;
            op.kind = OpKind::Search;
            if (!(ls >> op.keyword))
                fail("search needs a keyword");
            std::string who;
            if (ls >> who && who != "owner") {
                std::stringstream gs(who);
                std::string g;
                while (std::getline(gs, g, ','))
                    if (!g.empty())
                        op.groups.push_back(g);
            }
            h.ops.push_back(std::move(op));
        } else if (verb == "delete") {
            Operation op;
            op.kind = OpKind::Delete;
            if (!(ls >> op.name))
                fail("delete needs a document name");
            h.ops.push_back(std::move(op));
        } else if (verb == "add") {
            Operation op;
            op.kind = OpKind::Add;
            op.docs.push_back(read_doc(ls));
            h.ops.push_back(std::move(op));
        } else if (verb == "and") {
            if (h.ops.empty() || h.ops.back().kind != OpKind::Add)
                fail("'and' must follow an 'add' line");
            h.ops.back().docs.push_back(read_doc(ls));
        } else {
            fail("unknown directive '" + verb + "'");
        }
    }
    return h;
}

History load_history(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw NotFound("cannot read history " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_history(ss.str());
}

std::string serialize_history(const History& h)
{
    std::ostringstream out;
    for (const auto& d : h.corpus.documents)
        out << "doc " << d.name << " " << d.group << " " << d.body << "\n";
    for (const auto& op : h.ops) {
        switch (op.kind) {
        case OpKind::Search:
            out << "search " << op.keyword << " ";
            if (op.groups.empty())
                out << "owner";
            else
                for (std::size_t i = 0; i < op.groups.size(); ++i)
                    out << (i ? "," : "") << op.groups[i];
            out << "\n";
            break;
        case OpKind::Delete:
            out << "delete " << op.name << "\n";
            break;
        case OpKind::Add:
            for (std::size_t i = 0; i < op.docs.size(); ++i)
                out << (i ? "and " : "add ") << op.docs[i].name << " " << op.docs[i].group << " " << op.docs[i].body
                    << "\n";
            break;
        }
    }
    return out.str();
}

History random_history(std::uint64_t seed, const HistoryShape& shape)
{
    if (shape.vocabulary == 0 || shape.groups == 0 || shape.min_words == 0 || shape.max_words < shape.min_words)
        throw DomainError("bad history shape");
    std::mt19937_64 rng(seed);
    auto uniform = [&](std::size_t k) { return static_cast<std::size_t>(rng() % k); };
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::vector<double> cdf(shape.vocabulary);
    double total = 0;
    for (std::size_t i = 0; i < shape.vocabulary; ++i)
        cdf[i] = (total += 1.0 / static_cast<double>(i + 1));
    auto word = [&] {
        const double u = unit() * total;
        const auto i = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        char buf[16];
        std::snprintf(buf, sizeof buf, "k%03zu", std::min(i, shape.vocabulary - 1));
        return std::string(buf);
    };
    auto group = [&] { return "G" + std::to_string(uniform(shape.groups) + 1); };

    std::vector<std::string> fresh_words;
    auto body = [&](bool allow_new) {
        const std::size_t k = shape.min_words + uniform(shape.max_words - shape.min_words + 1);
        std::string b;
        for (std::size_t i = 0; i < k; ++i)
            b += (i ? " " : "") + word();
        if (allow_new && unit() < 0.3) {
            fresh_words.push_back("n" + std::to_string(fresh_words.size()));
            b += " " + fresh_words.back();
        }
        return b;
    };

    History h;
    for (std::size_t g = 1; g <= shape.groups; ++g)
        h.corpus.groups.insert("G" + std::to_string(g));
    std::vector<std::string> alive;
    for (std::size_t i = 1; i <= shape.n; ++i) {
        Document d;
        d.id = i;
        d.name = "d" + std::to_string(i);
        d.group = group();
        d.body = body(false);
        alive.push_back(d.name);
        h.corpus.documents.push_back(std::move(d));
    }

    std::size_t added = 0;
    for (std::size_t i = 0; i < shape.ops; ++i) {
        const double r = unit();
        Operation op;
        if (r < 0.25 && !alive.empty()) {
            op.kind = OpKind::Delete;
            const auto k = uniform(alive.size());
            op.name = alive[k];
            alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(k));
        } else if (r < 0.45) {
            op.kind = OpKind::Add;
            const std::size_t count = 1 + uniform(3);
            for (std::size_t k = 0; k < count; ++k) {
                Document d;
                d.name = "a" + std::to_string(++added);
                d.group = group();
                d.body = body(true);
                alive.push_back(d.name);
                op.docs.push_back(std::move(d));
            }
        } else {
            op.kind = OpKind::Search;
            const double pick = unit();
            if (pick < 0.1)
                op.keyword = "zz" + std::to_string(uniform(4));
            else if (pick < 0.2 && !fresh_words.empty())
                op.keyword = fresh_words[uniform(fresh_words.size())];
            else
                op.keyword = word();
            if (unit() >= 0.3) {
                for (std::size_t g = 1; g <= shape.groups; ++g)
                    if (unit() < 0.5)
                        op.groups.push_back("G" + std::to_string(g));
                if (op.groups.empty())
                    op.groups.push_back(group());
            }
        }
        h.ops.push_back(std::move(op));
    }
    return h;
}

// ---------------------------------------------------------------------------
// Plaintext reference
// ---------------------------------------------------------------------------

PlainReference::PlainReference(const Corpus& corpus, std::uint64_t upsilon, Tokenizer tokenizer)
    : tokenizer_(std::move(tokenizer)), n_setup_(corpus.n())
{
    for (const auto& d : corpus.documents) {
        docs_[d.id] = {d.name, d.group, d.body, extract_keywords(d.body, tokenizer_)};
        names_[d.name] = d.id;
    }
    for (const auto& [w, ids] : build_inverted_index(corpus, tokenizer_).entries)
        setup_kind_[w] = payload_kind_for(ids.size(), upsilon);
}

std::vector<DocId> PlainReference::search(const std::string& keyword, const std::vector<GroupId>* groups) const
{
    std::vector<DocId> out;
    for (const auto& [id, e] : docs_) {
        if (!e.keywords.count(keyword))
            continue;
        if (groups && std::find(groups->begin(), groups->end(), e.group) == groups->end())
            continue;
        out.push_back(id);
    }
    return out;
}

void PlainReference::remove(const std::string& name)
{
    auto it = names_.find(name);
    if (it == names_.end())
        throw NotFound("no live document named " + name);
    docs_.erase(it->second);
    names_.erase(it);
}

void PlainReference::add(DocId id, const Document& doc)
{
    Entry e{doc.name, doc.group, doc.body, extract_keywords(doc.body, tokenizer_)};
    for (const auto& w : e.keywords)
        if (!setup_kind_.count(w))
            added_keywords_.insert(w);
    names_[doc.name] = id;
    docs_[id] = std::move(e);
}

int PlainReference::payload_type(const std::string& keyword) const
{
    auto it = setup_kind_.find(keyword);
    if (it != setup_kind_.end())
        return type_of(it->second);
    return added_keywords_.count(keyword) ? 2 : 0;
}

PayloadKind PlainReference::block_kind(const std::string& keyword, DocId id) const
{
    auto it = setup_kind_.find(keyword);
    if (it != setup_kind_.end() && it->second == PayloadKind::BitVector && id <= n_setup_)
        return PayloadKind::BitVector;
    return PayloadKind::List;
}

std::optional<DocId> PlainReference::id_of(const std::string& name) const
{
    auto it = names_.find(name);
    if (it == names_.end())
        return std::nullopt;
    return it->second;
}

std::size_t stored_ciphertext_length(std::size_t body_len, std::size_t keywords, std::size_t avg_w)
{
    return padded_length(body_len, keywords, avg_w) + kDocumentHeaderBytes;
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

std::string TraceItem::render() const
{
    std::ostringstream out;
    out << kind << " op=" << op << " pt=" << payload_type;
    switch (kind) {
    case 'S': {
        std::vector<std::string> hs;
        for (const auto& h : hits)
            hs.push_back(h.group + ":" + std::to_string(h.id) + "@" + std::to_string(h.column) + "." +
                         std::to_string(h.slot));
        out << " hits=[" << join(hs, ",") << "]";
        break;
    }
    case 'D':
        out << " at=" << block << "." << slot;
        break;
    default:
        out << " count=" << count;
    }
    return out.str();
}

std::string TraceOp::render() const
{
    std::ostringstream out;
    switch (kind) {
    case OpKind::Search:
        out << "search labels=" << join(labels, ",") << " owner=" << owner;
        break;
    case OpKind::Delete:
        out << "delete id=" << deleted << " bytes=" << ciphertext_bytes << " cells=" << cells;
        break;
    case OpKind::Add: {
        std::vector<std::string> ds;
        for (const auto& [id, len, g] : added)
            ds.push_back(std::to_string(id) + ":" + std::to_string(len) + ":" + g);
        out << "add docs=" << join(ds, ",");
        break;
    }
    }
    return out.str();
}

std::vector<std::string> Trace::lines() const
{
    std::vector<std::string> out;
    std::ostringstream p;
    p << "params n=" << params.n << " id_bits=" << params.id_bits << " upsilon=" << params.upsilon
      << " avg_w=" << params.avg_w << " m=" << params.m << " auth=" << params.auth;
    out.push_back(p.str());
    out.push_back("entries bitvec=" + std::to_string(bitvec_entries) + " list=" + std::to_string(list_entries));
    for (const auto& [id, len] : lengths) {
        auto g = groups.find(id);
        out.push_back("doc " + std::to_string(id) + " len=" + std::to_string(len) +
                      (g != groups.end() ? " group=" + g->second : ""));
    }
    for (std::size_t i = 0; i < ops.size(); ++i)
        out.push_back("op " + std::to_string(i) + " " + ops[i].render());
    std::vector<std::string> kws;
    for (const auto& items : keywords) {
        std::vector<std::string> parts;
        for (const auto& it : items)
            parts.push_back(it.render());
        kws.push_back("keyword " + join(parts, " | "));
    }
    std::sort(kws.begin(), kws.end());
    out.insert(out.end(), kws.begin(), kws.end());
    return out;
}

std::string Trace::text() const
{
    std::string out;
    for (const auto& l : lines())
        out += l + "\n";
    return out;
}

Trace TraceBuilder::finish()
{
    std::vector<std::pair<std::string, std::vector<TraceItem>>> profiles;
    for (auto& [_, items] : items_) {
        for (auto& it : items)
            std::sort(it.hits.begin(), it.hits.end());
        std::sort(items.begin(), items.end());
        std::vector<std::string> parts;
        for (const auto& it : items)
            parts.push_back(it.render());
        profiles.emplace_back(join(parts, " | "), std::move(items));
    }
    std::sort(profiles.begin(), profiles.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    trace_.keywords.clear();
    for (auto& [_, items] : profiles)
        trace_.keywords.push_back(std::move(items));
    items_.clear();
    return trace_;
}

std::string trace_diff(const Trace& expected, const Trace& actual)
{
    const auto a = expected.lines();
    const auto b = actual.lines();
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
        const std::string x = i < a.size() ? a[i] : "<end>";
        const std::string y = i < b.size() ? b[i] : "<end>";
        if (x != y)
            return "line " + std::to_string(i + 1) + ": expected '" + x + "', got '" + y + "'";
    }
    return {};
}

SetupObservation observe_setup(const CloudServer& server)
{
    SetupObservation s;
    s.params = server.params();
    for (const auto& [id, d] : server.documents()) {
        s.lengths[id] = d.ciphertext.size();
        if (s.params.auth)
            s.groups[id] = d.group;
    }
    for (const auto& [tag, _] : server.helper()) {
        const int t = server.payload_type(tag);
        if (t == 1)
            ++s.bitvec_entries;
        else if (t == 2)
            ++s.list_entries;
    }
    return s;
}

Trace server_trace(const SetupObservation& setup, const std::vector<Observation>& log)
{
    TraceBuilder b;
    auto& t = b.trace();
    t.params = setup.params;
    t.params.n_total = setup.params.n;
    t.lengths = setup.lengths;
    t.groups = setup.groups;
    t.bitvec_entries = setup.bitvec_entries;
    t.list_entries = setup.list_entries;

    for (std::size_t i = 0; i < log.size(); ++i) {
        if (const auto* s = std::get_if<SearchObservation>(&log[i])) {
            TraceOp op;
            op.kind = OpKind::Search;
            op.labels = sorted_unique(s->token_groups);
            op.owner = s->owner;
            b.op(std::move(op));
            TraceItem it;
            it.op = i;
            it.kind = 'S';
            it.payload_type = s->payload_type;
            it.hits = s->hits;
            b.note(to_hex(s->tag), std::move(it));
        } else if (const auto* d = std::get_if<DeleteObservation>(&log[i])) {
            TraceOp op;
            op.kind = OpKind::Delete;
            op.deleted = d->id;
            op.ciphertext_bytes = d->ciphertext_bytes;
            op.cells = d->cell_count;
            b.op(std::move(op));
            for (const auto& [cell, kind] : d->cells) {
                TraceItem it;
                it.op = i;
                it.kind = 'D';
                it.payload_type = type_of(kind);
                it.block = cell.block;
                it.slot = cell.slot;
                b.note(to_hex(cell.tag), std::move(it));
            }
        } else {
            const auto& a = std::get<AddObservation>(log[i]);
            TraceOp op;
            op.kind = OpKind::Add;
            op.added = a.documents;
            std::sort(op.added.begin(), op.added.end());
            b.op(std::move(op));
            std::map<Tag, int> prior(a.prior_types.begin(), a.prior_types.end());
            for (const auto& [tag, count] : a.request.items) {
                TraceItem it;
                it.op = i;
                it.kind = 'A';
                it.payload_type = prior.count(tag) ? prior.at(tag) : 0;
                it.count = count;
                b.note(to_hex(tag), std::move(it));
            }
        }
    }
    return b.finish();
}

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

namespace {

std::string magic_of(const Bytes& b)
{
    return b.size() >= 4 ? std::string(b.begin(), b.begin() + 4) : std::string("?");
}

void state_shape(const std::string& prefix, const Bytes& state, std::vector<std::string>& out)
{
    auto server = CloudServer::from_snapshot(state, ServerOptions{std::nullopt, 1, false});
    const auto& p = server->params();
    std::ostringstream head;
    head << prefix << " params n=" << p.n << " n_total=" << p.n_total << " id_bits=" << p.id_bits
         << " upsilon=" << p.upsilon << " avg_w=" << p.avg_w << " m=" << p.m << " auth=" << p.auth;
    out.push_back(head.str());

    for (const auto& [id, d] : server->documents())
        out.push_back(prefix + " doc " + std::to_string(id) + " len=" + std::to_string(d.ciphertext.size()) +
                      " group=" + d.group);

    std::map<Tag, std::vector<std::pair<std::uint32_t, std::string>>> rows;
    for (unsigned j = 1; j <= p.m; ++j) {
        std::size_t nrows = 0;
        std::size_t nblocks = 0;
        server->store().region(j).for_each([&](const Tag& tag, const Row& row) {
            ++nrows;
            nblocks += row.size();
            auto& r = rows[tag];
            for (const auto& [col, b] : row)
                r.emplace_back(col, std::string(b.kind == PayloadKind::BitVector ? "B" : "L") +
                                        std::to_string(encode_block(b, p.eta()).size()) +
                                        (b.signal ? "s" + std::to_string(b.invalid_count()) : ""));
        });
        out.push_back(prefix + " region " + std::to_string(j) + " rows=" + std::to_string(nrows) +
                      " blocks=" + std::to_string(nblocks));
    }
    std::vector<std::string> entries;
    for (auto& [tag, cols] : rows) {
        std::sort(cols.begin(), cols.end());
        std::vector<std::string> parts;
        for (const auto& [c, s] : cols)
            parts.push_back(std::to_string(c) + ":" + s);
        const auto& h = server->helper();
        auto it = h.find(tag);
        std::string helper = "none";
        if (it != h.end()) {
            helper = "c" + std::to_string(it->second.counter);
            for (std::size_t v = 1; v < it->second.delta.size(); ++v)
                if (!it->second.delta[v].empty())
                    helper += " d" + std::to_string(v) + "=" + std::to_string(it->second.delta[v].size());
            helper += " r" + std::to_string(it->second.reserved.size());
        }
        entries.push_back(prefix + " entry [" + join(parts, ",") + "] helper " + helper);
    }
    std::sort(entries.begin(), entries.end());
    out.insert(out.end(), entries.begin(), entries.end());

    std::vector<std::string> urows;
    for (const auto& [_, r] : server->update_index())
        urows.push_back(prefix + " update id=" + std::to_string(r.id) + " cells=" + std::to_string(r.entry.cells.size()));
    std::sort(urows.begin(), urows.end());
    out.insert(out.end(), urows.begin(), urows.end());
}

} // namespace

ViewShape view_shape(const View& view)
{
    ViewShape s;
    state_shape("setup", view.setup_state, s.lines);
    state_shape("final", view.final_state, s.lines);

    std::map<Tag, std::size_t> seen;
    auto cls = [&](const Tag& t) {
        auto [it, _] = seen.emplace(t, seen.size());
        return "#" + std::to_string(it->second);
    };
    for (std::size_t i = 0; i < view.tokens.size(); ++i) {
        const auto& tok = view.tokens[i];
        const std::string magic = magic_of(tok);
        std::string line = "token " + std::to_string(i) + " " + magic + " bytes=" + std::to_string(tok.size());
        if (magic == "TRPD") {
            line += " tag=" + cls(decode_trapdoor(tok).tag);
        } else if (magic == "ATRP") {
            auto td = decode_auth_trapdoor(tok);
            std::vector<std::string> labels;
            for (const auto& c : td.components)
                labels.push_back(c.group);
            line += " tag=" + cls(td.tag) + " owner=" + std::to_string(td.owner) + " labels=" +
                    join(sorted_unique(labels), ",");
        } else if (magic == "DTOK") {
            line += " doc=" + cls(decode_deletion_token(tok).doc_tag);
        } else if (magic == "AREQ") {
            std::vector<std::string> items;
            for (const auto& [tag, count] : decode_addition_request(tok).items) {
                auto it = seen.find(tag);
                items.push_back((it == seen.end() ? std::string("new") : "#" + std::to_string(it->second)) + ":" +
                                std::to_string(count));
            }
            std::sort(items.begin(), items.end());
            line += " items=" + join(items, ",");
        }
        s.lines.push_back(std::move(line));
    }
    return s;
}

std::string shape_diff(const ViewShape& a, const ViewShape& b)
{
    for (std::size_t i = 0; i < std::max(a.lines.size(), b.lines.size()); ++i) {
        const std::string x = i < a.lines.size() ? a.lines[i] : "<end>";
        const std::string y = i < b.lines.size() ? b.lines[i] : "<end>";
        if (x != y)
            return "'" + x + "' vs '" + y + "'";
    }
    return {};
}

// ---------------------------------------------------------------------------
// Real run
// ---------------------------------------------------------------------------

namespace {

bool body_matches(const std::string& decrypted, const std::string& body)
{
    if (decrypted.size() < body.size() || decrypted.compare(0, body.size(), body) != 0)
        return false;
    return std::all_of(decrypted.begin() + static_cast<std::ptrdiff_t>(body.size()), decrypted.end(),
                       [](char c) { return c == ' '; });
}

} // namespace

RealRun run_history(const History& history, const EngineConfig& config, const RunOptions& options)
{
    RealRun run;
    const bool auth = config.auth;
    const auto all_groups = history.all_groups();
    const KeyRing keys = keygen(all_groups, config.seed);
    const std::vector<GroupId> group_list(all_groups.begin(), all_groups.end());

    Owner owner(config, keys);
    auto recorder = std::make_shared<MaskRecorder>();
    owner.search_oracle().attach_recorder(recorder);
    const auto pkg = owner.setup(history.corpus);
    CloudServer server(pkg, ServerOptions{config.latency_us, config.threads, true});
    PlainReference ref(history.corpus, owner.params().upsilon);
    const User full_reader(keys, group_list, auth);

    const auto setup_obs = observe_setup(server);
    run.view.setup_state = server.snapshot_bytes();
    if (options.keep_snapshots)
        run.snapshots.push_back(run.view.setup_state);

    TraceBuilder gt;
    {
        auto& t = gt.trace();
        t.params = owner.params();
        for (const auto& [id, e] : ref.documents()) {
            t.lengths[id] = stored_ciphertext_length(e.body.size(), e.keywords.size(), config.avg_w);
            if (auth)
                t.groups[id] = e.group;
        }
        for (const auto& [_, kind] : ref.setup_kinds())
            ++(kind == PayloadKind::BitVector ? t.bitvec_entries : t.list_entries);
    }

    const std::size_t eta = owner.params().eta();
    for (std::size_t i = 0; i < history.ops.size(); ++i) {
        const auto& op = history.ops[i];
        switch (op.kind) {
        case OpKind::Search: {
            const bool by_owner = op.groups.empty();
            const auto user_groups = sorted_unique(op.groups);
            TraceOp top;
            top.kind = OpKind::Search;
            top.labels = !auth ? std::vector<GroupId>{kBasic}
                               : (by_owner ? std::vector<GroupId>{kOwnerLabel} : user_groups);
            top.owner = auth && by_owner;
            gt.op(top);

            const bool filtered = auth && !by_owner;
            const auto expected = ref.search(op.keyword, filtered ? &user_groups : nullptr);
            TraceItem item;
            item.op = i;
            item.kind = 'S';
            item.payload_type = ref.payload_type(op.keyword);
            for (DocId id : expected) {
                const auto& loc = owner.placement().at(op.keyword).at(id);
                const GroupId label = !auth ? kBasic : (by_owner ? kOwnerLabel : ref.documents().at(id).group);
                item.hits.push_back({id, loc.block, loc.slot, label});
            }
            gt.note(op.keyword, std::move(item));

            SearchResponse resp;
            if (!auth) {
                const auto td = owner.trapdoor(op.keyword);
                run.view.tokens.push_back(encode(td));
                resp = server.search(td);
            } else {
                const auto td = by_owner
                                    ? owner.owner_trapdoor(op.keyword)
                                    : User(user_keyring(keys, op.groups, true), op.groups, true).auth_trapdoor(op.keyword);
                run.view.tokens.push_back(encode(td));
                resp = server.search(td);
            }

            ++run.searches;
            std::vector<DocId> got = resp.ids;
            std::sort(got.begin(), got.end());
            if (got != expected) {
                ++run.result_mismatches;
                std::vector<DocId> extra;
                std::vector<DocId> missing;
                std::set_difference(got.begin(), got.end(), expected.begin(), expected.end(), std::back_inserter(extra));
                std::set_difference(expected.begin(), expected.end(), got.begin(), got.end(),
                                    std::back_inserter(missing));
                run.false_accepts += extra.size();
                run.missed += missing.size();
                run.notes.push_back("op " + std::to_string(i) + " search '" + op.keyword + "': " +
                                    std::to_string(extra.size()) + " unexpected, " + std::to_string(missing.size()) +
                                    " missing");
            }
            if (options.check_decryption) {
                try {
                    const auto plain = filtered
                                           ? User(user_keyring(keys, op.groups, true), op.groups, true).decrypt(resp)
                                           : full_reader.decrypt(resp);
                    for (const auto& [id, text] : plain) {
                        auto e = ref.documents().find(id);
                        if (e == ref.documents().end() || !body_matches(text, e->second.body))
                            ++run.decrypt_failures;
                    }
                } catch (const Error& e) {
                    ++run.decrypt_failures;
                    run.notes.push_back("op " + std::to_string(i) + " decrypt: " + e.what());
                }
            }
            break;
        }
        case OpKind::Delete: {
            const auto id = ref.id_of(op.name);
            if (!id)
                throw DomainError("history deletes unknown document '" + op.name + "'");
            const auto& e = ref.documents().at(*id);
            TraceOp top;
            top.kind = OpKind::Delete;
            top.deleted = *id;
            top.ciphertext_bytes = stored_ciphertext_length(e.body.size(), e.keywords.size(), config.avg_w);
            top.cells = xi(top.ciphertext_bytes - kDocumentHeaderBytes, config.avg_w);
            gt.op(top);
            for (const auto& w : e.keywords) {
                const auto& loc = owner.placement().at(w).at(*id);
                TraceItem item;
                item.op = i;
                item.kind = 'D';
                item.payload_type = type_of(ref.block_kind(w, *id));
                item.block = loc.block;
                item.slot = loc.slot;
                gt.note(w, std::move(item));
            }

            const auto token = owner.deletion_token(op.name);
            run.view.tokens.push_back(encode(token));
            server.remove(token);
            owner.forget_document(op.name);
            ref.remove(op.name);
            break;
        }
        case OpKind::Add: {
            DocId next = owner.params().n_total + 1;
            TraceOp top;
            top.kind = OpKind::Add;
            std::map<std::string, std::uint64_t> counts;
            std::vector<DocId> ids;
            for (const auto& d : op.docs) {
                const auto kws = extract_keywords(d.body);
                top.added.emplace_back(next, stored_ciphertext_length(d.body.size(), kws.size(), config.avg_w),
                                       auth ? d.group : GroupId{});
                ids.push_back(next++);
                for (const auto& w : kws)
                    ++counts[w];
            }
            gt.op(top);
            for (const auto& [w, c] : counts) {
                TraceItem item;
                item.op = i;
                item.kind = 'A';
                item.payload_type = ref.payload_type(w);
                item.count = c;
                gt.note(w, std::move(item));
            }

            const auto req = owner.begin_addition(op.docs);
            run.view.tokens.push_back(encode(req));
            const auto resp = server.serve_addition(req);
            const auto commit = owner.finish_addition(resp);
            run.view.tokens.push_back(encode(commit, eta));
            server.commit_addition(commit);
            owner.confirm_addition();
            for (std::size_t k = 0; k < op.docs.size(); ++k) {
                if (owner.id_of(op.docs[k].name) != ids[k])
                    throw Error("owner assigned an unexpected id to " + op.docs[k].name);
                ref.add(ids[k], op.docs[k]);
            }
            break;
        }
        }
        if (options.keep_snapshots)
            run.snapshots.push_back(server.snapshot_bytes());
    }

    run.view.final_state = server.snapshot_bytes();
    run.ground_truth = gt.finish();
    run.observed = server_trace(setup_obs, server.observations());
    run.oracle_conflicts = recorder->conflicts();
    return run;
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

namespace {

struct SimClass
{
    Tag tag;
    std::map<GroupId, OracleKey> keys;
};

Block pad_for(const EncryptedBlock& b, bool owner_part, const Block& desired)
{
    return xor_blocks(owner_part ? b.owner.value() : b.user, desired);
}

} // namespace

SimulatedRun simulate(const Trace& trace, std::uint64_t seed, const RunOptions& options)
{
    SimulatedRun out;
    DeterministicRandom rnd(seed, "simulator");
    auto random_tag = [&] { return fixed_from_view<KeywordTagTag>(rnd.next_block()); };
    auto random_key = [&] { return fixed_from_view<OracleKeyTag>(rnd.next_block()); };
    auto random_bytes = [&](std::size_t n) {
        Bytes b(n);
        rnd.fill(b);
        return b;
    };

    PublicParams params = trace.params;
    params.n_total = params.n;
    const auto geom = params.geometry();
    const std::size_t eta = params.eta();
    const bool auth = params.auth;

    auto random_block = [&](std::uint32_t index, PayloadKind kind) {
        EncryptedBlock b;
        b.index = index;
        b.kind = kind;
        b.user = rnd.next_block();
        if (auth)
            b.owner = rnd.next_block();
        if (kind == PayloadKind::List)
            b.signal = 0;
        return b;
    };

    // Keyword classes: setup classes take an index entry of their kind, the
    // rest get a tag that matches nothing.
    std::vector<SimClass> classes(trace.keywords.size());
    std::vector<Tag> bit_tags(trace.bitvec_entries);
    std::vector<Tag> list_tags(trace.list_entries);
    for (auto& t : bit_tags)
        t = random_tag();
    for (auto& t : list_tags)
        t = random_tag();
    std::size_t next_bit = 0;
    std::size_t next_list = 0;
    std::map<std::size_t, std::vector<std::pair<std::size_t, const TraceItem*>>> by_op;
    for (std::size_t c = 0; c < trace.keywords.size(); ++c) {
        const auto& items = trace.keywords[c];
        for (const auto& it : items)
            by_op[it.op].emplace_back(c, &it);
        const auto& first = items.front();
        const bool in_setup = first.kind == 'D' || first.payload_type != 0;
        if (!in_setup) {
            classes[c].tag = random_tag();
            continue;
        }
        int type = 0;
        for (const auto& it : items)
            if (it.kind != 'D' && it.payload_type != 0) {
                type = it.payload_type;
                break;
            }
        if (type == 0)
            type = std::any_of(items.begin(), items.end(), [](const auto& it) { return it.payload_type == 1; }) ? 1 : 2;
        if (type == 1) {
            if (next_bit >= bit_tags.size())
                throw Error("trace names more bit-vector keywords than the index holds");
            classes[c].tag = bit_tags[next_bit++];
        } else {
            if (next_list >= list_tags.size())
                throw Error("trace names more list keywords than the index holds");
            classes[c].tag = list_tags[next_list++];
        }
    }

    SetupPackage pkg;
    pkg.params = params;
    for (const auto& t : bit_tags) {
        EncryptedEntry e{t, PayloadKind::BitVector, {}};
        for (std::uint64_t j = 1; j <= geom.ell(); ++j)
            e.blocks.push_back(random_block(static_cast<std::uint32_t>(j), PayloadKind::BitVector));
        pkg.entries.push_back(std::move(e));
    }
    for (const auto& t : list_tags) {
        EncryptedEntry e{t, PayloadKind::List, {}};
        for (std::uint64_t j = 1; j <= geom.iota(); ++j)
            e.blocks.push_back(random_block(static_cast<std::uint32_t>(j), PayloadKind::List));
        pkg.entries.push_back(std::move(e));
    }

    std::map<DocId, Tag> doc_tags;
    auto make_document = [&](DocId id, std::size_t len, const GroupId& group, std::vector<UpdateRow>& rows,
                             std::vector<StoredDocument>& docs) {
        if (len < kDocumentHeaderBytes)
            throw Error("trace holds a ciphertext shorter than its header");
        UpdateRow row;
        row.id = id;
        row.entry.doc_tag = random_tag();
        for (std::size_t k = 0; k < xi(len - kDocumentHeaderBytes, params.avg_w); ++k)
            row.entry.cells.push_back(random_bytes(kAddressCellBytes));
        doc_tags[id] = row.entry.doc_tag;
        rows.push_back(std::move(row));
        docs.push_back({id, auth ? group : GroupId{}, random_bytes(len)});
    };
    for (const auto& [id, len] : trace.lengths) {
        auto g = trace.groups.find(id);
        make_document(id, len, g != trace.groups.end() ? g->second : GroupId{}, pkg.update_rows, pkg.documents);
    }

    CloudServer server(pkg, ServerOptions{std::nullopt, 1, true});
    const auto setup_obs = observe_setup(server);
    out.view.setup_state = server.snapshot_bytes();
    if (options.keep_snapshots)
        out.snapshots.push_back(out.view.setup_state);

    auto class_key = [&](std::size_t c, const GroupId& label) {
        auto [it, fresh] = classes[c].keys.try_emplace(label);
        if (fresh)
            it->second = random_key();
        return it->second;
    };

    for (std::size_t i = 0; i < trace.ops.size(); ++i) {
        const auto& op = trace.ops[i];
        const auto& touched = by_op[i];
        switch (op.kind) {
        case OpKind::Search: {
            if (touched.size() != 1 || touched[0].second->kind != 'S')
                throw Error("search " + std::to_string(i) + " must touch exactly one keyword");
            const std::size_t c = touched[0].first;
            const TraceItem& item = *touched[0].second;
            const auto row = server.store().gather(classes[c].tag);

            for (const auto& label : op.labels) {
                const OracleKey key = class_key(c, label);
                const bool owner_part = label == kOwnerLabel;
                const bool per_group = auth && !owner_part;
                for (const auto& [col, b] : row) {
                    Block desired{};
                    for (const auto& h : item.hits) {
                        if (h.column != col || h.group != label)
                            continue;
                        if (b.kind == PayloadKind::List)
                            write_slot(desired, h.slot, params.id_bits, h.id);
                        else
                            set_bit(desired, h.slot, true);
                    }
                    auto& oracle = server.search_oracle();
                    const Block ct = owner_part ? b.owner.value() : b.user;
                    if (auto existing = oracle.programmed(key, b.index)) {
                        // Same key and input seen before: the old answer must
                        // still decrypt to this query's result.
                        const Block dec = xor_blocks(ct, to_block(*existing));
                        bool ok = true;
                        if (b.kind == PayloadKind::List) {
                            for (std::size_t x = 1; x <= eta && ok; ++x)
                                if (!b.slot_invalid(x) &&
                                    read_slot(dec, x, params.id_bits) != read_slot(desired, x, params.id_bits))
                                    ok = false;
                        } else {
                            for (std::size_t rho = 1; rho <= kKappaBits && ok; ++rho) {
                                const DocId id = (std::uint64_t{col} - 1) * kKappaBits + rho;
                                if (id > params.n)
                                    break;
                                if (per_group && server.groups().group_of(id) != label)
                                    continue;
                                if (get_bit(dec, rho) != get_bit(desired, rho))
                                    ok = false;
                            }
                        }
                        if (!ok)
                            throw Error("search " + std::to_string(i) + " contradicts an earlier oracle answer");
                        continue;
                    }
                    const Block pad = pad_for(b, owner_part, desired);
                    oracle.program(key, b.index, pad);
                    ++out.programmed_search;
                }
            }

            if (!auth) {
                Trapdoor td{classes[c].tag, class_key(c, kBasic)};
                out.view.tokens.push_back(encode(td));
                server.search(td);
            } else {
                AuthTrapdoor td;
                td.tag = classes[c].tag;
                td.owner = op.owner;
                for (const auto& label : op.labels)
                    td.components.push_back({label, class_key(c, label)});
                out.view.tokens.push_back(encode(td));
                server.search(td);
            }
            break;
        }
        case OpKind::Delete: {
            auto dt = doc_tags.find(op.deleted);
            if (dt == doc_tags.end())
                throw Error("deletion " + std::to_string(i) + " names an unknown document");
            const auto& stored = server.update_index().at(dt->second).entry.cells;
            std::vector<AddressCell> cells;
            for (const auto& [c, it] : touched) {
                if (it->kind != 'D')
                    throw Error("deletion " + std::to_string(i) + " carries a non-deletion item");
                cells.push_back({classes[c].tag, it->block, it->slot});
            }
            if (cells.size() > stored.size() || stored.size() != op.cells)
                throw Error("deletion " + std::to_string(i) + " has an inconsistent cell count");
            while (cells.size() < stored.size())
                cells.push_back({random_tag(), kFakeField, kFakeField});

            const DeletionToken token{dt->second, random_key()};
            for (std::size_t k = 0; k < cells.size(); ++k) {
                Bytes value = stored[k];
                xor_into(value, cells[k].encode());
                server.deletion_oracle().program(token.key, k + 1, value);
                ++out.programmed_deletion;
            }
            out.view.tokens.push_back(encode(token));
            server.remove(token);
            break;
        }
        case OpKind::Add: {
            AdditionRequest req;
            std::map<Tag, std::uint64_t> counts;
            for (const auto& [c, it] : touched) {
                if (it->kind != 'A')
                    throw Error("addition " + std::to_string(i) + " carries a non-addition item");
                req.items.emplace_back(classes[c].tag, it->count);
                counts[classes[c].tag] = it->count;
            }
            std::sort(req.items.begin(), req.items.end());
            out.view.tokens.push_back(encode(req));
            const auto resp = server.serve_addition(req);

            AdditionCommit commit;
            for (const auto& served : resp.items) {
                const std::uint64_t need = counts.at(served.tag);
                std::uint64_t invalid = 0;
                for (const auto& sb : served.blocks)
                    invalid += sb.block.invalid_count();
                const std::uint64_t rest = need > invalid ? need - invalid : 0;
                const std::uint64_t fresh = (rest + eta - 1) / eta;
                KeywordUpdate u;
                u.tag = served.tag;
                std::uint64_t ctr = served.counter;
                for (const auto& sb : served.blocks)
                    u.blocks.push_back({sb.column, random_block(static_cast<std::uint32_t>(++ctr), PayloadKind::List),
                                        false});
                for (std::uint64_t f = 0; f < fresh; ++f) {
                    ++ctr;
                    u.blocks.push_back({static_cast<std::uint32_t>(ctr),
                                        random_block(static_cast<std::uint32_t>(ctr), PayloadKind::List), true});
                }
                u.new_counter = ctr;
                commit.updates.push_back(std::move(u));
            }
            for (const auto& [id, len, group] : op.added)
                make_document(id, len, group, commit.update_rows, commit.documents);
            out.view.tokens.push_back(encode(commit, eta));
            server.commit_addition(commit);
            break;
        }
        }
        if (options.keep_snapshots)
            out.snapshots.push_back(server.snapshot_bytes());
    }

    out.view.final_state = server.snapshot_bytes();
    out.observed = server_trace(setup_obs, server.observations());
    return out;
}

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

bool AuditReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const AuditCheck& c) { return c.passed; });
}

std::string AuditReport::text() const
{
    std::ostringstream out;
    for (const auto& c : checks)
        out << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
    for (const auto& n : real.notes)
        out << "note " << n << "\n";
    return out.str();
}

std::string AuditReport::json_lines() const
{
    std::string out;
    for (const auto& c : checks) {
        nlohmann::json j{{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}};
        out += j.dump() + "\n";
    }
    nlohmann::json summary{{"searches", real.searches},         {"result_mismatches", real.result_mismatches},
                           {"false_accepts", real.false_accepts}, {"missed", real.missed},
                           {"oracle_conflicts", real.oracle_conflicts}, {"passed", passed()}};
    out += summary.dump() + "\n";
    return out;
}

AuditReport audit(const History& history, const EngineConfig& config, std::uint64_t sim_seed)
{
    AuditReport r;
    r.real = run_history(history, config);
    const auto& real = r.real;

    auto diff = trace_diff(real.ground_truth, real.observed);
    r.checks.push_back({"trace-equality", diff.empty(),
                        diff.empty() ? std::to_string(real.ground_truth.lines().size()) + " trace lines agree" : diff});

    std::ostringstream res;
    res << real.searches << " searches, " << real.result_mismatches << " mismatched, " << real.false_accepts
        << " false accepts, " << real.missed << " missed";
    r.checks.push_back({"search-results", real.result_mismatches == 0, res.str()});
    r.checks.push_back({"decryption", real.decrypt_failures == 0,
                        std::to_string(real.decrypt_failures) + " returned documents failed to decrypt"});
    r.checks.push_back({"oracle-input-reuse", real.oracle_conflicts == 0,
                        std::to_string(real.oracle_conflicts) + " inputs reused with a different plaintext"});

    try {
        auto sim = simulate(real.ground_truth, sim_seed);
        diff = trace_diff(real.ground_truth, sim.observed);
        r.checks.push_back({"simulated-replay", diff.empty(),
                            diff.empty() ? std::to_string(sim.programmed_search) + " search and " +
                                               std::to_string(sim.programmed_deletion) + " deletion answers programmed"
                                         : diff});
        diff = shape_diff(view_shape(real.view), view_shape(sim.view));
        r.checks.push_back({"view-shape", diff.empty(), diff.empty() ? "real and simulated views agree" : diff});
        r.simulated = std::move(sim);
    } catch (const Error& e) {
        r.checks.push_back({"simulated-replay", false, e.what()});
        r.checks.push_back({"view-shape", false, "no simulated view"});
    }
    return r;
}

} // namespace dsse
