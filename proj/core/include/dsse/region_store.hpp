#pragma once

#include "dsse/bytes.hpp"
#include "dsse/secure_index.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <thread>
#include <vector>

namespace dsse {

inline constexpr unsigned kMaxRegions = 65535;
inline constexpr std::size_t kRowKeyBytes = 2 + 32;

/// Region j's lower bound: 2-byte big-endian j followed by 256 zero bits.
Bytes region_bound(unsigned j);
std::vector<Bytes> region_bounds(unsigned m);

/// Region whose [R_j, R_{j+1}) range contains `key` (binary search over bounds).
unsigned region_for_key(const std::vector<Bytes>& bounds, ByteView key);

/// ((k - 1) mod m) + 1
unsigned region_of_block(std::uint64_t k, unsigned m);

Bytes row_key(unsigned region, const Tag& tag);
std::pair<unsigned, Tag> parse_row_key(ByteView key);

/// Column index -> block.
using Row = std::map<std::uint32_t, EncryptedBlock>;

/// Splits an entry into m rows (element j-1 is region j). Rows may be empty.
std::vector<Row> partition_entry(const EncryptedEntry& entry, unsigned m);

/// One region's rows. Reads take a shared lock, writes an exclusive one, so a
/// reader never sees a half-written block.
class RegionServer
{
public:
    explicit RegionServer(unsigned id) : id_(id) {}

    unsigned id() const { return id_; }

    void put_row(const Tag& tag, Row row);
    std::optional<Row> get_row(const Tag& tag) const;
    bool has_row(const Tag& tag) const;
    /// Calls fn(row) under the shared lock; returns false when the row is missing.
    bool with_row(const Tag& tag, const std::function<void(const Row&)>& fn) const;

    /// Throws NotFound when the row or column is missing.
    EncryptedBlock get_block(const Tag& tag, std::uint32_t column) const;
    /// Creates the row if needed.
    void put_block(const Tag& tag, std::uint32_t column, const EncryptedBlock& block);
    /// In-place mutation of an existing block; throws NotFound if absent.
    void update_block(const Tag& tag, std::uint32_t column, const std::function<void(EncryptedBlock&)>& fn);
    void delete_row(const Tag& tag);

    std::size_t row_count() const;
    std::size_t block_count() const;
    /// Rows in tag order.
    void for_each(const std::function<void(const Tag&, const Row&)>& fn) const;

private:
    unsigned id_;
    mutable std::shared_mutex mu_;
    std::map<Tag, Row> rows_;
};

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

/// Fixed-size worker pool. run() blocks until every task finished and
/// rethrows the first exception.
class ThreadPool
{
public:
    explicit ThreadPool(std::size_t threads);
    ~ThreadPool();
    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    std::size_t size() const { return workers_.size(); }
    void run(std::vector<std::function<void()>> tasks);

private:
    void loop();

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> queue_;
    bool stop_ = false;
    std::vector<std::thread> workers_;
};

using RegionTask = std::function<void(RegionServer&)>;

class Transport
{
public:
    virtual ~Transport() = default;

    /// Runs fn against every listed region concurrently. Any failure fails the
    /// whole call with a TransportError naming the region.
    virtual void scatter(const std::vector<unsigned>& regions, const std::function<void(unsigned, RegionServer&)>& fn) = 0;

    void call(unsigned region, const RegionTask& fn)
    {
        scatter({region}, [&](unsigned, RegionServer& s) { fn(s); });
    }
};

class RegionStore;

/// In-process calls on a worker pool sized to the region count.
class DirectTransport final : public Transport
{
public:
    DirectTransport(RegionStore& store, std::size_t threads);
    void scatter(const std::vector<unsigned>& regions, const std::function<void(unsigned, RegionServer&)>& fn) override;

private:
    RegionStore& store_;
    std::unique_ptr<ThreadPool> pool_;
};

/// Message channel with one server thread per region, optional per-message
/// latency and fault injection.
class LoopbackTransport final : public Transport
{
public:
    LoopbackTransport(RegionStore& store, std::chrono::microseconds latency);
    ~LoopbackTransport() override;

    void scatter(const std::vector<unsigned>& regions, const std::function<void(unsigned, RegionServer&)>& fn) override;

    void fail_region(unsigned region, bool fail = true);

private:
    struct Channel;

    RegionStore& store_;
    std::chrono::microseconds latency_;
    std::vector<std::unique_ptr<Channel>> channels_;
    std::mutex fault_mu_;
    std::set<unsigned> faulty_;
};

// ---------------------------------------------------------------------------

/// Master plus m region servers.
class RegionStore
{
public:
    explicit RegionStore(unsigned m);

    unsigned m() const { return static_cast<unsigned>(servers_.size()); }
    RegionServer& region(unsigned j);
    const RegionServer& region(unsigned j) const;
    const std::vector<Bytes>& bounds() const { return bounds_; }

    /// Partitions and stores every row of the entry, one per region.
    void put_entry(const EncryptedEntry& entry);

    /// All blocks of a keyword across regions, keyed by column.
    std::map<std::uint32_t, EncryptedBlock> gather(const Tag& tag) const;
    bool has_keyword(const Tag& tag) const;
    void delete_keyword(const Tag& tag);

    std::size_t row_count() const;
    std::size_t block_count() const;

    /// Store-wide reader-writer lock: searches share, mutations exclude.
    std::shared_mutex& master_lock() const { return master_mu_; }

private:
    std::vector<std::unique_ptr<RegionServer>> servers_;
    std::vector<Bytes> bounds_;
    mutable std::shared_mutex master_mu_;
};

} // namespace dsse
