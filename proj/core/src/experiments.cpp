#include "dsse/experiments.hpp"

#include "dsse/errors.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

namespace dsse {

std::size_t list_index_bytes(std::size_t keywords, std::uint64_t upsilon, unsigned id_bits, bool auth)
{
    const BlockGeometry geom{id_bits, 0, upsilon};
    return keywords * geom.iota() * encoded_block_size(auth, true, geom.eta());
}

StorageComparison compare_storage(const Corpus& corpus, const EngineConfig& config, std::size_t max_list_blocks)
{
    const auto index = build_inverted_index(corpus);
    StorageComparison out;
    out.keywords = index.z();
    for (const auto& [w, ids] : index.entries)
        out.max_frequency = std::max<std::uint64_t>(out.max_frequency, ids.size());

    ServerOptions quiet;
    quiet.observe = false;
    const auto keys = keygen(corpus.groups, config.seed);
    {
        Owner owner(config, keys);
        const auto pkg = owner.setup(corpus);
        out.upsilon = pkg.params.upsilon;
        for (const auto& e : pkg.entries)
            out.bitvec_keywords += e.kind == PayloadKind::BitVector;
        CloudServer server(pkg, quiet);
        out.mixed_bytes = server.index_bytes();
    }
    {
        StorageParams sp{corpus.n(), index.z(), config.id_bits, 1};
        std::map<std::string, PlainPayload> payloads;
        for (const auto& [w, ids] : index.entries) {
            PlainPayload p;
            p.kind = PayloadKind::BitVector;
            p.bits = BitVector(corpus.n());
            for (auto id : ids)
                p.bits.set(id);
            payloads.emplace(w, std::move(p));
        }
        Owner owner(config, keys);
        CloudServer server(owner.setup_with_payloads(corpus, payloads, sp), quiet);
        out.bitvec_bytes = server.index_bytes();
    }
    const BlockGeometry lg{config.id_bits, corpus.n(), std::max<std::uint64_t>(1, out.max_frequency)};
    if (out.keywords * lg.iota() <= max_list_blocks) {
        auto cfg = config;
        cfg.upsilon_override = lg.upsilon;
        Owner owner(cfg, keys);
        CloudServer server(owner.setup(corpus), quiet);
        out.list_bytes = server.index_bytes();
        out.list_materialized = true;
    } else {
        out.list_bytes = list_index_bytes(out.keywords, lg.upsilon, config.id_bits, config.auth);
    }
    return out;
}

double LatencySample::median() const
{
    if (ms.empty())
        return 0;
    auto v = ms;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2;
}

double LatencySample::mean() const
{
    return ms.empty() ? 0 : std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
}

LatencySample time_searches(CloudServer& server, const Owner& owner, const std::vector<std::string>& keywords,
                            std::size_t queries, std::uint64_t seed, const std::vector<GroupId>& groups)
{
    if (keywords.empty())
        throw DomainError("no keywords to query");
    std::mt19937_64 rng(seed);
    const bool auth = owner.config().auth;
    std::optional<User> user;
    if (!groups.empty())
        user.emplace(user_keyring(owner.keys(), groups, auth), groups, auth);
    LatencySample s;
    s.ms.reserve(queries);
    for (std::size_t q = 0; q < queries; ++q) {
        const auto& w = keywords[rng() % keywords.size()];
        const auto t0 = std::chrono::steady_clock::now();
        if (user && auth)
            server.search(user->auth_trapdoor(w));
        else if (user)
            server.search(user->trapdoor(w));
        else if (auth)
            server.search(owner.owner_trapdoor(w));
        else
            server.search(owner.trapdoor(w));
        const auto t1 = std::chrono::steady_clock::now();
        s.ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return s;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw DomainError("least squares needs two or more paired points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0)
        throw DomainError("least squares needs distinct x values");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

Corpus replicate_corpus(const Corpus& base, std::size_t n)
{
    if (base.documents.empty())
        throw DomainError("cannot replicate an empty corpus");
    Corpus out;
    out.groups = base.groups;
    out.documents.reserve(n);
    for (std::size_t copy = 0; out.documents.size() < n; ++copy)
        for (const auto& d : base.documents) {
            if (out.documents.size() >= n)
                break;
            Document c = d;
            c.id = out.documents.size() + 1;
            c.name = copy ? d.name + "." + std::to_string(copy) : d.name;
            out.documents.push_back(std::move(c));
        }
    return out;
}

std::vector<std::string> vocabulary(const Corpus& corpus)
{
    std::vector<std::string> out;
    for (const auto& [w, _] : build_inverted_index(corpus).entries)
        out.push_back(w);
    return out;
}

} // namespace dsse
