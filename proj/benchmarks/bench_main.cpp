#include <dsse/crypto.hpp>
#include <dsse/experiments.hpp>
#include <dsse/synthetic.hpp>
#include <dsse/system.hpp>

#include <benchmark/benchmark.h>

#include <memory>
#include <random>

using namespace dsse;

namespace {

Corpus bench_corpus(std::size_t n)
{
    SyntheticSpec spec;
    spec.n = n;
    spec.z = 20000;
    spec.groups = 4;
    return zipf_corpus(spec);
}

EngineConfig bench_config(unsigned m, bool auth)
{
    EngineConfig c;
    c.m = m;
    c.auth = auth;
    c.seed = 3;
    return c;
}

struct Deployment
{
    Corpus corpus;
    std::unique_ptr<Owner> owner;
    std::unique_ptr<CloudServer> server;
    std::vector<std::string> words;

    Deployment(std::size_t n, unsigned m, bool auth) : corpus(bench_corpus(n))
    {
        owner = std::make_unique<Owner>(bench_config(m, auth), keygen(corpus.groups, 3));
        ServerOptions opt;
        opt.observe = false;
        server = std::make_unique<CloudServer>(owner->setup(corpus), opt);
        words = vocabulary(corpus);
    }
};

} // namespace

static void BM_OracleBlock(benchmark::State& state)
{
    RandomOracle os(OracleLabel::Search);
    const auto keys = keygen({kDefaultGroup}, 1);
    const auto key = derive_oracle_key(keys.payload, "w1");
    std::uint32_t j = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(os.query(key, ++j));
}
BENCHMARK(BM_OracleBlock);

static void BM_Setup(benchmark::State& state)
{
    const auto corpus = bench_corpus(static_cast<std::size_t>(state.range(0)));
    const auto keys = keygen(corpus.groups, 3);
    for (auto _ : state) {
        Owner owner(bench_config(1, false), keys);
        benchmark::DoNotOptimize(owner.setup(corpus));
    }
}
BENCHMARK(BM_Setup)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

// Args: n, m, auth
static void BM_Search(benchmark::State& state)
{
    Deployment d(static_cast<std::size_t>(state.range(0)), static_cast<unsigned>(state.range(1)), state.range(2) != 0);
    std::mt19937_64 rng(1);
    for (auto _ : state) {
        const auto& w = d.words[rng() % d.words.size()];
        if (d.owner->config().auth)
            benchmark::DoNotOptimize(d.server->search(d.owner->owner_trapdoor(w)));
        else
            benchmark::DoNotOptimize(d.server->search(d.owner->trapdoor(w)));
    }
}
BENCHMARK(BM_Search)
    ->Args({2000, 1, 0})
    ->Args({2000, 3, 0})
    ->Args({2000, 1, 1})
    ->Args({10000, 1, 0})
    ->Unit(benchmark::kMicrosecond);

static void BM_DeleteThenAdd(benchmark::State& state)
{
    Deployment d(2000, 1, false);
    const auto docs = documents_with_keywords(1, static_cast<std::size_t>(state.range(0)), "bench", 1, 20000);
    std::size_t round = 0;
    for (auto _ : state) {
        auto doc = docs.front();
        doc.name += std::to_string(round++);
        const auto req = d.owner->begin_addition({doc});
        d.server->commit_addition(d.owner->finish_addition(d.server->serve_addition(req)));
        d.owner->confirm_addition();
        d.server->remove(d.owner->deletion_token(doc.name));
        d.owner->forget_document(doc.name);
    }
}
BENCHMARK(BM_DeleteThenAdd)->Arg(50)->Arg(150)->Arg(250)->Unit(benchmark::kMillisecond);

static void BM_Delete(benchmark::State& state)
{
    Deployment d(2000, 1, false);
    const auto docs = documents_with_keywords(1, static_cast<std::size_t>(state.range(0)), "bench", 1, 20000);
    std::size_t round = 0;
    for (auto _ : state) {
        state.PauseTiming();
        auto doc = docs.front();
        doc.name += std::to_string(round++);
        const auto req = d.owner->begin_addition({doc});
        d.server->commit_addition(d.owner->finish_addition(d.server->serve_addition(req)));
        d.owner->confirm_addition();
        state.ResumeTiming();
        d.server->remove(d.owner->deletion_token(doc.name));
        d.owner->forget_document(doc.name);
    }
}
BENCHMARK(BM_Delete)->Arg(50)->Arg(250)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
