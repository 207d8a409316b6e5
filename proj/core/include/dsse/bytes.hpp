#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dsse {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Output length of the search-index oracle, in bits and bytes.
inline constexpr std::size_t kKappaBits = 256;
inline constexpr std::size_t kKappaBytes = kKappaBits / 8;

/// One κ-bit payload block.
using Block = std::array<std::uint8_t, kKappaBytes>;

/// Fixed 256-bit value with a phantom tag so keys, keyword tags and oracle keys
/// cannot be mixed up at call sites.
template <typename TagT>
struct Fixed256
{
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const Fixed256&) const = default;

    ByteView view() const { return {bytes.data(), bytes.size()}; }
};

struct SecretKeyTag;
struct KeywordTagTag;
struct OracleKeyTag;

using SecretKey = Fixed256<SecretKeyTag>;
using Tag = Fixed256<KeywordTagTag>;
using OracleKey = Fixed256<OracleKeyTag>;

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

template <typename T>
std::string to_hex(const Fixed256<T>& v)
{
    return to_hex(v.view());
}

template <typename T>
Fixed256<T> fixed_from_hex(std::string_view hex);

void put_be32(Bytes& out, std::uint32_t v);
void put_be64(Bytes& out, std::uint64_t v);
std::uint32_t get_be32(ByteView in, std::size_t offset);
std::uint64_t get_be64(ByteView in, std::size_t offset);

void xor_into(std::span<std::uint8_t> dst, ByteView src);
Block xor_blocks(const Block& a, const Block& b);

// Bit positions inside a block are 1-based and MSB-first: bit 1 is the high
// bit of byte 0.
bool get_bit(const Block& b, std::size_t pos);
void set_bit(Block& b, std::size_t pos, bool value);
void flip_bit(Block& b, std::size_t pos);

// Identifier slots are 1-based, fixed-width, big-endian.
std::uint64_t read_slot(const Block& b, std::size_t slot, unsigned id_bits);
void write_slot(Block& b, std::size_t slot, unsigned id_bits, std::uint64_t value);

inline Block to_block(ByteView v)
{
    Block b{};
    for (std::size_t i = 0; i < b.size() && i < v.size(); ++i)
        b[i] = v[i];
    return b;
}

template <typename T>
Fixed256<T> fixed_from_view(ByteView v)
{
    Fixed256<T> out;
    for (std::size_t i = 0; i < out.bytes.size() && i < v.size(); ++i)
        out.bytes[i] = v[i];
    return out;
}

template <typename T>
Fixed256<T> fixed_from_hex(std::string_view hex)
{
    return fixed_from_view<T>(from_hex(hex));
}

} // namespace dsse
