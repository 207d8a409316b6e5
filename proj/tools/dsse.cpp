// dsse: command-line front end for the encrypted index.
//
// Exit codes: 0 success, 1 usage or configuration, 2 protocol error,
// 3 integrity or audit failure.

#include <dsse/config.hpp>
#include <dsse/corpus.hpp>
#include <dsse/errors.hpp>
#include <dsse/experiments.hpp>
#include <dsse/leakage.hpp>
#include <dsse/protocol.hpp>
#include <dsse/synthetic.hpp>
#include <dsse/system.hpp>

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace dsse;

namespace {

constexpr int kUsage = 1;
constexpr int kProtocol = 2;
constexpr int kIntegrity = 3;

class AuditFailed : public Error
{
public:
    using Error::Error;
};

std::vector<GroupId> split_groups(const std::string& s)
{
    std::vector<GroupId> out;
    std::stringstream ss(s);
    std::string g;
    while (std::getline(ss, g, ','))
        if (!g.empty())
            out.push_back(g);
    return out;
}

struct StatePaths
{
    fs::path dir;
    fs::path server() const { return dir / "server.bin"; }
    fs::path owner() const { return dir / "owner.json"; }
    fs::path config() const { return dir / "engine.conf"; }
};

EngineConfig load_config(const std::string& explicit_path, const StatePaths* state)
{
    if (!explicit_path.empty())
        return EngineConfig::load(explicit_path);
    if (state && fs::exists(state->config()))
        return EngineConfig::load(state->config());
    throw ConfigError("no engine config: pass --config");
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << text;
}

// ---------------------------------------------------------------------------

struct KeygenArgs
{
    std::string groups = "G1";
    std::optional<std::uint64_t> seed;
    std::string out;
};

void run_keygen(const KeygenArgs& a)
{
    const auto groups = split_groups(a.groups);
    const auto keys = keygen(std::set<GroupId>(groups.begin(), groups.end()), a.seed);
    keys.save(a.out);
    std::cout << "wrote " << a.out << " (" << keys.groups.size() << " groups)\n";
}

struct BuildArgs
{
    std::string corpus;
    std::string group_map;
    std::string keys;
    std::string config;
    std::string state;
};

void run_build(const BuildArgs& a)
{
    const StatePaths st{a.state};
    const auto config = load_config(a.config, nullptr);
    const auto keys = KeyRing::load(a.keys);
    std::map<std::string, GroupId> groups;
    if (!a.group_map.empty())
        groups = read_group_map(a.group_map);
    const auto corpus = load_corpus_directory(a.corpus, groups);
    for (const auto& g : corpus.groups)
        if (!keys.groups.count(g))
            throw ConfigError("key file has no keys for group " + g);

    Owner owner(config, keys);
    const auto pkg = owner.setup(corpus);
    ServerOptions opts;
    opts.observe = false;
    CloudServer server(pkg, opts);
    fs::create_directories(st.dir);
    server.save(st.server());
    owner.save_state(st.owner());
    write_text(st.config(), config.serialize());
    std::cout << "documents " << pkg.params.n << "\nkeywords " << pkg.entries.size() << "\nupsilon "
              << pkg.params.upsilon << "\nregions " << pkg.params.m << "\nindex_bytes " << server.index_bytes()
              << "\n";
}

struct Session
{
    StatePaths st;
    EngineConfig config;
    KeyRing keys;
    std::unique_ptr<Owner> owner;
    std::unique_ptr<CloudServer> server;

    Session(const std::string& state, const std::string& keys_path, const std::string& config_path)
        : st{state}
    {
        config = load_config(config_path, &st);
        keys = KeyRing::load(keys_path);
        owner = Owner::load_state(st.owner(), config, keys);
        ServerOptions opts;
        opts.observe = false;
        opts.latency_us = config.latency_us;
        opts.threads = config.threads;
        server = CloudServer::load(st.server(), opts);
    }

    void save()
    {
        server->save(st.server());
        owner->save_state(st.owner());
    }
};

struct SearchArgs
{
    std::string state;
    std::string keys;
    std::string config;
    std::string keyword;
    std::string user;
    std::string out;
    std::string token;
};

void run_search(const SearchArgs& a)
{
    Session s(a.state, a.keys, a.config);
    const bool auth = s.config.auth;
    const auto groups = split_groups(a.user);
    SearchResponse resp;
    Bytes token;
    if (groups.empty()) {
        if (auth) {
            const auto td = s.owner->owner_trapdoor(a.keyword);
            token = encode(td);
            resp = s.server->search(decode_auth_trapdoor(token));
        } else {
            const auto td = s.owner->trapdoor(a.keyword);
            token = encode(td);
            resp = s.server->search(decode_trapdoor(token));
        }
    } else {
        for (const auto& g : groups)
            if (!s.keys.groups.count(g))
                throw ConfigError("unknown group " + g);
        const User user(user_keyring(s.keys, groups, auth), groups, auth);
        if (auth) {
            token = encode(user.auth_trapdoor(a.keyword));
            resp = s.server->search(decode_auth_trapdoor(token));
        } else {
            token = encode(user.trapdoor(a.keyword));
            resp = s.server->search(decode_trapdoor(token));
        }
    }
    if (!a.token.empty())
        write_file(a.token, token);
    for (auto id : resp.ids)
        std::cout << id << "\n";
    if (!a.out.empty()) {
        std::vector<GroupId> all;
        for (const auto& [g, _] : s.keys.groups)
            all.push_back(g);
        const User reader(groups.empty() ? s.keys : user_keyring(s.keys, groups, auth), groups.empty() ? all : groups,
                          auth);
        fs::create_directories(a.out);
        for (const auto& [id, body] : reader.decrypt(resp))
            write_text(fs::path(a.out) / (std::to_string(id) + ".txt"), body);
    }
}

struct DeleteArgs
{
    std::string state;
    std::string keys;
    std::string config;
    std::string name;
    std::string token;
};

void run_delete(const DeleteArgs& a)
{
    Session s(a.state, a.keys, a.config);
    if (!s.owner->id_of(a.name))
        throw NotFound("no document named " + a.name);
    const auto token = encode(s.owner->deletion_token(a.name));
    if (!a.token.empty())
        write_file(a.token, token);
    const auto report = s.server->remove(decode_deletion_token(token));
    s.owner->forget_document(a.name);
    s.save();
    std::cout << "deleted " << a.name << " (" << report.cells.size() << " cells, " << report.bits_flipped
              << " bits cleared, " << report.slots_signaled << " slots freed)\n";
}

struct AddArgs
{
    std::string state;
    std::string keys;
    std::string config;
    std::string docs;
    std::string group = kDefaultGroup;
    std::string group_map;
    std::string exchange;
};

void run_add(const AddArgs& a)
{
    Session s(a.state, a.keys, a.config);
    std::map<std::string, GroupId> groups;
    if (!a.group_map.empty())
        groups = read_group_map(a.group_map);
    auto batch = load_corpus_directory(a.docs, groups);
    std::vector<Document> docs;
    for (auto& d : batch.documents) {
        if (!groups.count(d.name))
            d.group = a.group;
        if (s.config.auth && !s.keys.groups.count(d.group))
            throw ConfigError("key file has no keys for group " + d.group);
        docs.push_back(std::move(d));
    }
    if (docs.empty())
        throw ConfigError("no documents in " + a.docs);

    // Round 1: request -> response; round 2: commit. Each message crosses the
    // boundary in its wire form.
    const auto request = encode(s.owner->begin_addition(std::move(docs)));
    AdditionResponse served;
    try {
        served = s.server->serve_addition(decode_addition_request(request));
    } catch (...) {
        s.owner->abort_addition();
        throw;
    }
    const auto response = encode(served, s.server->params().eta());
    Bytes commit;
    try {
        commit = encode(s.owner->finish_addition(decode_addition_response(response)), s.server->params().eta());
        const auto report = s.server->commit_addition(decode_addition_commit(commit));
        s.owner->confirm_addition();
        std::cout << "added " << batch.documents.size() << " documents (" << report.reencrypted_blocks
                  << " blocks re-encrypted, " << report.new_blocks << " new blocks, " << report.new_rows
                  << " new region rows)\n";
    } catch (...) {
        s.server->abandon_addition(served);
        s.owner->abort_addition();
        throw;
    }
    if (!a.exchange.empty()) {
        fs::create_directories(a.exchange);
        write_file(fs::path(a.exchange) / "request.bin", request);
        write_file(fs::path(a.exchange) / "response.bin", response);
        write_file(fs::path(a.exchange) / "commit.bin", commit);
    }
    s.save();
}

struct AuditArgs
{
    std::string history;
    std::optional<std::uint64_t> random;
    std::string config;
    std::uint64_t sim_seed = 1;
    std::string json;
    std::string trace;
};

void run_audit(const AuditArgs& a)
{
    const auto config = load_config(a.config, nullptr);
    History h;
    if (!a.history.empty())
        h = load_history(a.history);
    else if (a.random)
        h = random_history(*a.random);
    else
        throw ConfigError("pass --history or --random");
    const auto report = audit(h, config, a.sim_seed);
    std::cout << report.text();
    if (!a.json.empty())
        write_text(a.json, report.json_lines());
    if (!a.trace.empty())
        write_text(a.trace, report.real.ground_truth.text());
    if (!report.passed())
        throw AuditFailed("audit failed");
}

struct GenCorpusArgs
{
    SyntheticSpec spec;
    std::string out;
};

void run_gen_corpus(const GenCorpusArgs& a)
{
    const auto corpus = zipf_corpus(a.spec);
    write_corpus_directory(corpus, a.out);
    std::cout << "wrote " << corpus.n() << " documents to " << (fs::path(a.out) / "docs").string() << "\n";
}

struct GenHistoryArgs
{
    std::uint64_t seed = 1;
    HistoryShape shape;
    std::string out;
};

void run_gen_history(const GenHistoryArgs& a)
{
    write_text(a.out, serialize_history(random_history(a.seed, a.shape)));
}

// ---------------------------------------------------------------------------

struct BenchArgs
{
    std::string sweep = "m";
    std::vector<std::uint64_t> values;
    std::size_t n = 2000;
    std::size_t z = 5000;
    std::size_t queries = 100;
    std::uint64_t seed = 1;
    std::optional<std::uint32_t> latency_us;
};

struct BenchPoint
{
    Corpus corpus;
    EngineConfig config;
    std::vector<GroupId> user;
};

void print_row(const std::vector<std::string>& cells)
{
    for (std::size_t i = 0; i < cells.size(); ++i)
        std::cout << (i ? "  " : "") << std::setw(12) << cells[i];
    std::cout << "\n";
}

std::string fixed3(double v)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << v;
    return s.str();
}

void run_bench(BenchArgs a)
{
    static const std::map<std::string, std::vector<std::uint64_t>> defaults{
        {"upsilon", {2, 4, 6, 8, 16, 32}}, {"n", {500, 1000, 2000, 4000}}, {"m", {1, 2, 3, 4}},
        {"groups", {1, 2, 3, 4, 5}},       {"avg_w", {3, 6, 12, 24}},     {"storage", {1000, 2000, 5000}}};
    auto def = defaults.find(a.sweep);
    if (def == defaults.end())
        throw ConfigError("unknown sweep '" + a.sweep + "' (upsilon, n, m, groups, avg_w, storage)");
    if (a.values.empty())
        a.values = def->second;

    auto corpus_for = [&](std::size_t n, std::size_t groups) {
        SyntheticSpec spec;
        spec.n = n;
        spec.z = a.z;
        spec.groups = groups;
        spec.seed = a.seed;
        return zipf_corpus(spec);
    };
    auto base_config = [&] {
        EngineConfig c;
        c.seed = a.seed;
        c.latency_us = a.latency_us;
        return c;
    };

    if (a.sweep == "storage") {
        print_row({"n", "keywords", "upsilon", "mixed_B", "bitvec_B", "list_B", "bitvec/mix"});
        for (auto n : a.values) {
            const auto r = compare_storage(corpus_for(n, 1), base_config());
            print_row({std::to_string(n), std::to_string(r.keywords), std::to_string(r.upsilon),
                       std::to_string(r.mixed_bytes), std::to_string(r.bitvec_bytes), std::to_string(r.list_bytes),
                       fixed3(static_cast<double>(r.bitvec_bytes) / static_cast<double>(r.mixed_bytes))});
        }
        return;
    }

    const bool avg = a.sweep == "avg_w";
    if (avg)
        print_row({"avg_w", "update_cells", "delete_ms", "add_ms", "index_B"});
    else
        print_row({a.sweep, "upsilon", "median_ms", "mean_ms", "index_B"});
    const std::size_t max_groups = a.sweep == "groups" ? *std::max_element(a.values.begin(), a.values.end()) : 1;
    for (auto v : a.values) {
        BenchPoint p;
        p.config = base_config();
        std::size_t n = a.n;
        if (a.sweep == "upsilon")
            p.config.upsilon_override = v;
        else if (a.sweep == "n")
            n = v;
        else if (a.sweep == "m")
            p.config.m = static_cast<unsigned>(v);
        else if (a.sweep == "avg_w")
            p.config.avg_w = v;
        else if (a.sweep == "groups") {
            p.config.auth = true;
            for (std::uint64_t g = 1; g <= v; ++g)
                p.user.push_back("G" + std::to_string(g));
        }
        p.corpus = corpus_for(n, max_groups);
        p.config.validate();

        Owner owner(p.config, keygen(p.corpus.groups, a.seed));
        ServerOptions opts;
        opts.observe = false;
        opts.latency_us = p.config.latency_us;
        CloudServer server(owner.setup(p.corpus), opts);

        if (avg) {
            std::size_t cells = 0;
            for (const auto& [_, row] : server.update_index())
                cells += row.entry.cells.size();
            // Delete and re-add a fixed sample of documents.
            std::vector<Document> sample(p.corpus.documents.begin(),
                                         p.corpus.documents.begin() +
                                             static_cast<long>(std::min<std::size_t>(20, p.corpus.n())));
            LatencySample del, add;
            for (auto& d : sample) {
                auto t0 = std::chrono::steady_clock::now();
                server.remove(owner.deletion_token(d.name));
                owner.forget_document(d.name);
                auto t1 = std::chrono::steady_clock::now();
                del.ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
                d.name += ".new";
                t0 = std::chrono::steady_clock::now();
                server.commit_addition(owner.finish_addition(server.serve_addition(owner.begin_addition({d}))));
                owner.confirm_addition();
                t1 = std::chrono::steady_clock::now();
                add.ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            }
            print_row({std::to_string(v), std::to_string(cells), fixed3(del.mean()), fixed3(add.mean()),
                       std::to_string(server.index_bytes())});
            continue;
        }
        const auto sample = time_searches(server, owner, vocabulary(p.corpus), a.queries, a.seed, p.user);
        print_row({std::to_string(v), std::to_string(server.params().upsilon), fixed3(sample.median()),
                   fixed3(sample.mean()), std::to_string(server.index_bytes())});
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Dynamic searchable encryption over a region-partitioned index"};
    app.require_subcommand(1);

    KeygenArgs kg;
    auto* c_keygen = app.add_subcommand("keygen", "Generate a key file");
    c_keygen->add_option("--groups", kg.groups, "Comma-separated access groups")->capture_default_str();
    c_keygen->add_option("--seed", kg.seed, "Deterministic keys (testing only)");
    c_keygen->add_option("--out", kg.out, "Key file to write")->required();

    BuildArgs b;
    auto* c_build = app.add_subcommand("build", "Encrypt a corpus directory into a state directory");
    c_build->add_option("--corpus", b.corpus, "Directory of documents")->required();
    c_build->add_option("--group-map", b.group_map, "name<TAB>group file");
    c_build->add_option("--keys", b.keys, "Key file")->required();
    c_build->add_option("--config", b.config, "Engine config")->required();
    c_build->add_option("--state", b.state, "Output state directory")->required();

    SearchArgs s;
    auto* c_search = app.add_subcommand("search", "Search for a keyword");
    c_search->add_option("--state", s.state)->required();
    c_search->add_option("--keys", s.keys)->required();
    c_search->add_option("--config", s.config, "Defaults to the state's engine.conf");
    c_search->add_option("--keyword", s.keyword)->required();
    c_search->add_option("--user", s.user, "Comma-separated groups of the querying user (default: owner)");
    c_search->add_option("--out", s.out, "Write decrypted documents here");
    c_search->add_option("--token", s.token, "Write the encoded trapdoor here");

    DeleteArgs d;
    auto* c_delete = app.add_subcommand("delete", "Delete a document by name");
    c_delete->add_option("--state", d.state)->required();
    c_delete->add_option("--keys", d.keys)->required();
    c_delete->add_option("--config", d.config);
    c_delete->add_option("--name", d.name)->required();
    c_delete->add_option("--token", d.token, "Write the encoded deletion token here");

    AddArgs ad;
    auto* c_add = app.add_subcommand("add", "Add a directory of documents");
    c_add->add_option("--state", ad.state)->required();
    c_add->add_option("--keys", ad.keys)->required();
    c_add->add_option("--config", ad.config);
    c_add->add_option("--docs", ad.docs)->required();
    c_add->add_option("--group", ad.group, "Group for documents missing from the group map")->capture_default_str();
    c_add->add_option("--group-map", ad.group_map);
    c_add->add_option("--exchange", ad.exchange, "Write request/response/commit messages here");

    AuditArgs au;
    auto* c_audit = app.add_subcommand("audit", "Replay a history and check the leakage profile");
    c_audit->add_option("--history", au.history, "History file");
    c_audit->add_option("--random", au.random, "Generate a random history from this seed instead");
    c_audit->add_option("--config", au.config)->required();
    c_audit->add_option("--sim-seed", au.sim_seed)->capture_default_str();
    c_audit->add_option("--json", au.json, "Write JSON lines report");
    c_audit->add_option("--trace", au.trace, "Write the ground-truth trace");

    BenchArgs be;
    auto* c_bench = app.add_subcommand("bench", "Parameter sweeps over synthetic corpora");
    c_bench->add_option("--sweep", be.sweep, "upsilon, n, m, groups, avg_w or storage")->capture_default_str();
    c_bench->add_option("--values", be.values, "Sweep points")->delimiter(',');
    c_bench->add_option("--n", be.n)->capture_default_str();
    c_bench->add_option("--z", be.z)->capture_default_str();
    c_bench->add_option("--queries", be.queries)->capture_default_str();
    c_bench->add_option("--seed", be.seed)->capture_default_str();
    c_bench->add_option("--latency-us", be.latency_us, "Inject per-region transport delay");

    GenCorpusArgs gc;
    auto* c_gen = app.add_subcommand("gen-corpus", "Write a Zipf-distributed synthetic corpus");
    c_gen->add_option("--n", gc.spec.n)->capture_default_str();
    c_gen->add_option("--z", gc.spec.z)->capture_default_str();
    c_gen->add_option("--groups", gc.spec.groups)->capture_default_str();
    c_gen->add_option("--seed", gc.spec.seed)->capture_default_str();
    c_gen->add_option("--min-words", gc.spec.min_words)->capture_default_str();
    c_gen->add_option("--max-words", gc.spec.max_words)->capture_default_str();
    c_gen->add_option("--out", gc.out)->required();

    GenHistoryArgs gh;
    auto* c_hist = app.add_subcommand("gen-history", "Write a random operation history");
    c_hist->add_option("--seed", gh.seed)->capture_default_str();
    c_hist->add_option("--n", gh.shape.n)->capture_default_str();
    c_hist->add_option("--ops", gh.shape.ops)->capture_default_str();
    c_hist->add_option("--groups", gh.shape.groups)->capture_default_str();
    c_hist->add_option("--out", gh.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    try {
        if (*c_keygen)
            run_keygen(kg);
        else if (*c_build)
            run_build(b);
        else if (*c_search)
            run_search(s);
        else if (*c_delete)
            run_delete(d);
        else if (*c_add)
            run_add(ad);
        else if (*c_audit)
            run_audit(au);
        else if (*c_bench)
            run_bench(be);
        else if (*c_gen)
            run_gen_corpus(gc);
        else if (*c_hist)
            run_gen_history(gh);
    } catch (const AuditFailed& e) {
        std::cerr << "dsse: " << e.what() << "\n";
        return kIntegrity;
    } catch (const IntegrityError& e) {
        std::cerr << "dsse: integrity: " << e.what() << "\n";
        return kIntegrity;
    } catch (const ConfigError& e) {
        std::cerr << "dsse: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "dsse: " << e.what() << "\n";
        return kProtocol;
    }
    return 0;
}
