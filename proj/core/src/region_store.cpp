#include "dsse/region_store.hpp"

#include "dsse/errors.hpp"

#include <algorithm>
#include <atomic>
#include <exception>

namespace dsse {

Bytes region_bound(unsigned j)
{
    if (j < 1 || j > kMaxRegions)
        throw DomainError("region index out of range");
    Bytes b(kRowKeyBytes, 0);
    b[0] = static_cast<std::uint8_t>(j >> 8);
    b[1] = static_cast<std::uint8_t>(j);
    return b;
}

std::vector<Bytes> region_bounds(unsigned m)
{
    if (m < 1 || m > kMaxRegions)
        throw DomainError("region count must be in 1..65535");
    std::vector<Bytes> out;
    out.reserve(m);
    for (unsigned j = 1; j <= m; ++j)
        out.push_back(region_bound(j));
    return out;
}

unsigned region_for_key(const std::vector<Bytes>& bounds, ByteView key)
{
    auto it = std::upper_bound(bounds.begin(), bounds.end(), key, [](ByteView k, const Bytes& b) {
        return std::lexicographical_compare(k.begin(), k.end(), b.begin(), b.end());
    });
    if (it == bounds.begin())
        throw DomainError("key sorts below the first region bound");
    return static_cast<unsigned>(it - bounds.begin());
}

unsigned region_of_block(std::uint64_t k, unsigned m)
{
    if (k < 1 || m < 1)
        throw DomainError("block index and region count must be positive");
    return static_cast<unsigned>((k - 1) % m) + 1;
}

Bytes row_key(unsigned region, const Tag& tag)
{
    Bytes key = region_bound(region);
    std::copy(tag.bytes.begin(), tag.bytes.end(), key.begin() + 2);
    return key;
}

std::pair<unsigned, Tag> parse_row_key(ByteView key)
{
    if (key.size() != kRowKeyBytes)
        throw DecodeError("row key must be 34 bytes");
    unsigned region = (static_cast<unsigned>(key[0]) << 8) | key[1];
    if (region == 0)
        throw DecodeError("row key names region 0");
    return {region, fixed_from_view<KeywordTagTag>(key.subspan(2))};
}

std::vector<Row> partition_entry(const EncryptedEntry& entry, unsigned m)
{
    if (m < 1)
        throw DomainError("region count must be positive");
    std::vector<Row> rows(m);
    for (const auto& b : entry.blocks) {
        auto& row = rows[region_of_block(b.index, m) - 1];
        if (!row.emplace(b.index, b).second)
            throw DomainError("duplicate column " + std::to_string(b.index));
    }
    return rows;
}

// ---------------------------------------------------------------------------

void RegionServer::put_row(const Tag& tag, Row row)
{
    std::unique_lock lock(mu_);
    rows_[tag] = std::move(row);
}

std::optional<Row> RegionServer::get_row(const Tag& tag) const
{
    std::shared_lock lock(mu_);
    auto it = rows_.find(tag);
    if (it == rows_.end())
        return std::nullopt;
    return it->second;
}

bool RegionServer::has_row(const Tag& tag) const
{
    std::shared_lock lock(mu_);
    return rows_.count(tag) != 0;
}

bool RegionServer::with_row(const Tag& tag, const std::function<void(const Row&)>& fn) const
{
    std::shared_lock lock(mu_);
    auto it = rows_.find(tag);
    if (it == rows_.end())
        return false;
    fn(it->second);
    return true;
}

EncryptedBlock RegionServer::get_block(const Tag& tag, std::uint32_t column) const
{
    std::shared_lock lock(mu_);
    auto it = rows_.find(tag);
    if (it == rows_.end())
        throw NotFound("no row " + to_hex(tag) + " in region " + std::to_string(id_));
    auto col = it->second.find(column);
    if (col == it->second.end())
        throw NotFound("no column " + std::to_string(column) + " in region " + std::to_string(id_));
    return col->second;
}

void RegionServer::put_block(const Tag& tag, std::uint32_t column, const EncryptedBlock& block)
{
    std::unique_lock lock(mu_);
    rows_[tag][column] = block;
}

void RegionServer::update_block(const Tag& tag, std::uint32_t column, const std::function<void(EncryptedBlock&)>& fn)
{
    std::unique_lock lock(mu_);
    auto it = rows_.find(tag);
    if (it == rows_.end())
        throw NotFound("no row " + to_hex(tag) + " in region " + std::to_string(id_));
    auto col = it->second.find(column);
    if (col == it->second.end())
        throw NotFound("no column " + std::to_string(column) + " in region " + std::to_string(id_));
    fn(col->second);
}

void RegionServer::delete_row(const Tag& tag)
{
    std::unique_lock lock(mu_);
    if (rows_.erase(tag) == 0)
        throw NotFound("no row " + to_hex(tag) + " in region " + std::to_string(id_));
}

std::size_t RegionServer::row_count() const
{
    std::shared_lock lock(mu_);
    return rows_.size();
}

std::size_t RegionServer::block_count() const
{
    std::shared_lock lock(mu_);
    std::size_t n = 0;
    for (const auto& [_, row] : rows_)
        n += row.size();
    return n;
}

void RegionServer::for_each(const std::function<void(const Tag&, const Row&)>& fn) const
{
    std::shared_lock lock(mu_);
    for (const auto& [tag, row] : rows_)
        fn(tag, row);
}

// ---------------------------------------------------------------------------

ThreadPool::ThreadPool(std::size_t threads)
{
    for (std::size_t i = 0; i < threads; ++i)
        workers_.emplace_back([this] { loop(); });
}

ThreadPool::~ThreadPool()
{
    {
        std::lock_guard lock(mu_);
        stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_)
        t.join();
}

void ThreadPool::loop()
{
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
            if (queue_.empty())
                return;
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        task();
    }
}

void ThreadPool::run(std::vector<std::function<void()>> tasks)
{
    if (workers_.empty() || tasks.size() <= 1) {
        for (auto& t : tasks)
            t();
        return;
    }
    std::mutex done_mu;
    std::condition_variable done_cv;
    std::size_t remaining = tasks.size();
    std::exception_ptr first;
    {
        std::lock_guard lock(mu_);
        for (auto& t : tasks) {
            queue_.push_back([&, fn = std::move(t)] {
                std::exception_ptr err;
                try {
                    fn();
                } catch (...) {
                    err = std::current_exception();
                }
                std::lock_guard dl(done_mu);
                if (err && !first)
                    first = err;
                if (--remaining == 0)
                    done_cv.notify_one();
            });
        }
    }
    cv_.notify_all();
    std::unique_lock dl(done_mu);
    done_cv.wait(dl, [&] { return remaining == 0; });
    if (first)
        std::rethrow_exception(first);
}

namespace {

// Wraps a per-region call so failures carry the region id.
void run_region(unsigned j, RegionServer& server, const std::function<void(unsigned, RegionServer&)>& fn)
{
    try {
        fn(j, server);
    } catch (const TransportError&) {
        throw;
    } catch (const std::exception& e) {
        throw TransportError(j, e.what());
    }
}

} // namespace

DirectTransport::DirectTransport(RegionStore& store, std::size_t threads)
    : store_(store), pool_(threads > 1 ? std::make_unique<ThreadPool>(threads) : nullptr)
{
}

void DirectTransport::scatter(const std::vector<unsigned>& regions,
                              const std::function<void(unsigned, RegionServer&)>& fn)
{
    if (!pool_) {
        for (unsigned j : regions)
            run_region(j, store_.region(j), fn);
        return;
    }
    std::vector<std::function<void()>> tasks;
    tasks.reserve(regions.size());
    for (unsigned j : regions)
        tasks.push_back([this, j, &fn] { run_region(j, store_.region(j), fn); });
    pool_->run(std::move(tasks));
}

struct LoopbackTransport::Channel
{
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::function<void()>> inbox;
    bool stop = false;
    std::thread worker;

    void loop()
    {
        for (;;) {
            std::function<void()> msg;
            {
                std::unique_lock lock(mu);
                cv.wait(lock, [this] { return stop || !inbox.empty(); });
                if (inbox.empty())
                    return;
                msg = std::move(inbox.front());
                inbox.pop_front();
            }
            msg();
        }
    }
};

LoopbackTransport::LoopbackTransport(RegionStore& store, std::chrono::microseconds latency)
    : store_(store), latency_(latency)
{
    for (unsigned j = 1; j <= store.m(); ++j) {
        auto ch = std::make_unique<Channel>();
        ch->worker = std::thread([c = ch.get()] { c->loop(); });
        channels_.push_back(std::move(ch));
    }
}

LoopbackTransport::~LoopbackTransport()
{
    for (auto& ch : channels_) {
        {
            std::lock_guard lock(ch->mu);
            ch->stop = true;
        }
        ch->cv.notify_all();
        ch->worker.join();
    }
}

void LoopbackTransport::fail_region(unsigned region, bool fail)
{
    std::lock_guard lock(fault_mu_);
    if (fail)
        faulty_.insert(region);
    else
        faulty_.erase(region);
}

void LoopbackTransport::scatter(const std::vector<unsigned>& regions,
                                const std::function<void(unsigned, RegionServer&)>& fn)
{
    std::mutex done_mu;
    std::condition_variable done_cv;
    std::size_t remaining = regions.size();
    std::exception_ptr first;

    for (unsigned j : regions) {
        bool faulty;
        {
            std::lock_guard lock(fault_mu_);
            faulty = faulty_.count(j) != 0;
        }
        auto& ch = *channels_.at(j - 1);
        {
            std::lock_guard lock(ch.mu);
            ch.inbox.push_back([&, j, faulty] {
                std::exception_ptr err;
                try {
                    if (latency_.count() > 0)
                        std::this_thread::sleep_for(latency_);
                    if (faulty)
                        throw TransportError(j, "injected transport fault");
                    run_region(j, store_.region(j), fn);
                } catch (...) {
                    err = std::current_exception();
                }
                std::lock_guard dl(done_mu);
                if (err && !first)
                    first = err;
                if (--remaining == 0)
                    done_cv.notify_one();
            });
        }
        ch.cv.notify_one();
    }
    std::unique_lock dl(done_mu);
    done_cv.wait(dl, [&] { return remaining == 0; });
    if (first)
        std::rethrow_exception(first);
}

// ---------------------------------------------------------------------------

RegionStore::RegionStore(unsigned m) : bounds_(region_bounds(m))
{
    for (unsigned j = 1; j <= m; ++j)
        servers_.push_back(std::make_unique<RegionServer>(j));
}

RegionServer& RegionStore::region(unsigned j)
{
    if (j < 1 || j > servers_.size())
        throw DomainError("no region " + std::to_string(j));
    return *servers_[j - 1];
}

const RegionServer& RegionStore::region(unsigned j) const
{
    if (j < 1 || j > servers_.size())
        throw DomainError("no region " + std::to_string(j));
    return *servers_[j - 1];
}

void RegionStore::put_entry(const EncryptedEntry& entry)
{
    auto rows = partition_entry(entry, m());
    for (unsigned j = 1; j <= m(); ++j)
        region(j).put_row(entry.tag, std::move(rows[j - 1]));
}

std::map<std::uint32_t, EncryptedBlock> RegionStore::gather(const Tag& tag) const
{
    std::map<std::uint32_t, EncryptedBlock> out;
    for (const auto& s : servers_)
        s->with_row(tag, [&](const Row& row) { out.insert(row.begin(), row.end()); });
    return out;
}

bool RegionStore::has_keyword(const Tag& tag) const
{
    return servers_.front()->has_row(tag);
}

void RegionStore::delete_keyword(const Tag& tag)
{
    for (auto& s : servers_)
        s->delete_row(tag);
}

std::size_t RegionStore::row_count() const
{
    std::size_t n = 0;
    for (const auto& s : servers_)
        n += s->row_count();
    return n;
}

std::size_t RegionStore::block_count() const
{
    std::size_t n = 0;
    for (const auto& s : servers_)
        n += s->block_count();
    return n;
}

} // namespace dsse
