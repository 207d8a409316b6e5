#include "dsse/payload.hpp"

#include "dsse/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace dsse {

double harmonic(std::uint64_t n)
{
    if (n == 0)
        throw DomainError("harmonic number of 0 is undefined");
    double sum = 0.0;
    for (std::uint64_t k = 1; k <= n; ++k)
        sum += 1.0 / static_cast<double>(k);
    return sum;
}

double zipf_p(std::uint64_t x, std::uint64_t n)
{
    if (n == 0 || x == 0 || x > n)
        throw DomainError("zipf rank out of range");
    return 1.0 / (static_cast<double>(x) * harmonic(n));
}

double expected_storage_actual(std::uint64_t upsilon, std::span<const std::uint64_t> freqs, std::uint64_t n,
                               unsigned id_bits)
{
    double total = 0.0;
    for (auto f : freqs)
        total += f > upsilon ? static_cast<double>(n) : static_cast<double>(upsilon) * id_bits;
    return total;
}

double expected_storage_zipf(std::uint64_t t, std::uint64_t z, std::uint64_t n, unsigned id_bits)
{
    if (t == 0 || t > z)
        throw DomainError("rank cutoff t must satisfy 1 <= t <= z");
    const double dn = static_cast<double>(n);
    return static_cast<double>(t) * dn + static_cast<double>(z - t) * zipf_p(t, z) * dn * id_bits;
}

std::uint64_t optimal_upsilon(std::uint64_t n, std::uint64_t z, unsigned id_bits)
{
    if (n == 0 || z == 0)
        throw DomainError("optimal_upsilon needs n >= 1 and z >= 1");
    const double denom = std::sqrt(static_cast<double>(id_bits) * harmonic(z) * static_cast<double>(z));
    const double v = std::ceil(static_cast<double>(n) / denom);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(v));
}

void StorageParams::validate(std::uint64_t n_total) const
{
    if (upsilon < 1)
        throw DomainError("upsilon must be >= 1");
    if (id_bits != 16 && id_bits != 32 && id_bits != 64)
        throw DomainError("id_bits must be 16, 32 or 64");
    if (id_bits < 64 && n_total >= (std::uint64_t{1} << id_bits))
        throw DomainError("identifier width too small for " + std::to_string(n_total) + " documents");
}

std::uint64_t BitVector::count() const
{
    std::uint64_t c = 0;
    for (auto b : bytes_)
        c += static_cast<std::uint64_t>(std::popcount(b));
    return c;
}

PayloadKind payload_kind_for(std::uint64_t frequency, std::uint64_t upsilon)
{
    return frequency > upsilon ? PayloadKind::BitVector : PayloadKind::List;
}

PlainPayload build_payload(std::span<const DocId> postings, const StorageParams& params, std::mt19937_64& rng)
{
    PlainPayload p;
    p.kind = payload_kind_for(postings.size(), params.upsilon);
    if (p.kind == PayloadKind::BitVector) {
        p.bits = BitVector(params.n);
        for (auto id : postings) {
            if (id == 0 || id > params.n)
                throw DomainError("identifier " + std::to_string(id) + " outside setup range 1.." +
                                  std::to_string(params.n));
            p.bits.set(id);
        }
        return p;
    }
    for (auto id : postings)
        if (id == 0 || id > params.n)
            throw DomainError("identifier " + std::to_string(id) + " outside setup range 1.." +
                              std::to_string(params.n));
    p.ids.assign(postings.begin(), postings.end());
    p.ids.resize(params.upsilon, 0);
    std::shuffle(p.ids.begin(), p.ids.end(), rng);
    return p;
}

} // namespace dsse
