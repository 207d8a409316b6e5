#pragma once

#include "dsse/corpus.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dsse {

// Storage model for choosing between bit-vector and padded-list payloads.
//
// A keyword whose posting list is longer than the threshold `upsilon` is stored
// as an n-bit vector, anything else as a list of exactly `upsilon` identifiers
// (fakes are 0). The threshold is picked from a Zipf(1) model of keyword
// frequencies so it depends only on public quantities (n, z, |id|).

double harmonic(std::uint64_t n);

/// Zipf(1) probability of rank `x` among `n` ranks.
double zipf_p(std::uint64_t x, std::uint64_t n);

/// Expected index size in bits for the given per-keyword frequencies. A
/// frequency strictly above `upsilon` costs `n` bits, otherwise `upsilon * id_bits`.
double expected_storage_actual(std::uint64_t upsilon, std::span<const std::uint64_t> freqs, std::uint64_t n,
                               unsigned id_bits);

/// Zipf-model storage when the top `t` ranks are bit vectors.
double expected_storage_zipf(std::uint64_t t, std::uint64_t z, std::uint64_t n, unsigned id_bits);

/// ceil(n / sqrt(|id| * H(z) * z))
std::uint64_t optimal_upsilon(std::uint64_t n, std::uint64_t z, unsigned id_bits);

struct StorageParams
{
    std::uint64_t n = 0;        // setup document count
    std::uint64_t z = 0;        // setup keyword count
    unsigned id_bits = 32;
    std::uint64_t upsilon = 1;

    /// Throws DomainError unless upsilon >= 1, id_bits in {16,32,64} and
    /// 2^id_bits > n_total.
    void validate(std::uint64_t n_total) const;
};

enum class PayloadKind : std::uint8_t
{
    BitVector = 0,
    List = 1,
};

/// Packed n-bit vector, MSB-first, positions 1..n.
class BitVector
{
public:
    BitVector() = default;
    explicit BitVector(std::uint64_t size) : size_(size), bytes_((size + 7) / 8, 0) {}

    std::uint64_t size() const { return size_; }
    bool test(std::uint64_t pos) const { return (bytes_[(pos - 1) / 8] >> (7 - (pos - 1) % 8)) & 1u; }
    void set(std::uint64_t pos) { bytes_[(pos - 1) / 8] |= static_cast<std::uint8_t>(0x80u >> ((pos - 1) % 8)); }
    std::uint64_t count() const;

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

    bool operator==(const BitVector&) const = default;

private:
    std::uint64_t size_ = 0;
    std::vector<std::uint8_t> bytes_;
};

struct PlainPayload
{
    PayloadKind kind = PayloadKind::List;
    BitVector bits;             // BitVector kind: exactly n bits
    std::vector<DocId> ids;     // List kind: exactly upsilon slots, 0 = fake

    bool operator==(const PlainPayload&) const = default;
};

/// Builds the fixed-size payload for one posting list. List payloads are
/// uniformly shuffled so the real-id count is not visible from slot positions.
PlainPayload build_payload(std::span<const DocId> postings, const StorageParams& params, std::mt19937_64& rng);

PayloadKind payload_kind_for(std::uint64_t frequency, std::uint64_t upsilon);

} // namespace dsse
