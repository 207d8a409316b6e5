#include "dsse/bytes.hpp"

#include "dsse/errors.hpp"

#include <algorithm>

namespace dsse {

std::string to_hex(ByteView data)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

namespace {

int hex_value(char c)
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

} // namespace

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0)
        throw DecodeError("odd-length hex string");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw DecodeError("invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

void put_be32(Bytes& out, std::uint32_t v)
{
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_be64(Bytes& out, std::uint64_t v)
{
    for (int shift = 56; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint32_t get_be32(ByteView in, std::size_t offset)
{
    if (offset + 4 > in.size())
        throw DecodeError("truncated 32-bit field");
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i)
        v = (v << 8) | in[offset + i];
    return v;
}

std::uint64_t get_be64(ByteView in, std::size_t offset)
{
    if (offset + 8 > in.size())
        throw DecodeError("truncated 64-bit field");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i)
        v = (v << 8) | in[offset + i];
    return v;
}

void xor_into(std::span<std::uint8_t> dst, ByteView src)
{
    const std::size_t n = std::min(dst.size(), src.size());
    for (std::size_t i = 0; i < n; ++i)
        dst[i] ^= src[i];
}

Block xor_blocks(const Block& a, const Block& b)
{
    Block out;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a[i] ^ b[i];
    return out;
}

bool get_bit(const Block& b, std::size_t pos)
{
    const std::size_t i = pos - 1;
    return (b[i / 8] >> (7 - i % 8)) & 1u;
}

void set_bit(Block& b, std::size_t pos, bool value)
{
    const std::size_t i = pos - 1;
    const auto mask = static_cast<std::uint8_t>(0x80u >> (i % 8));
    if (value)
        b[i / 8] |= mask;
    else
        b[i / 8] &= static_cast<std::uint8_t>(~mask);
}

void flip_bit(Block& b, std::size_t pos)
{
    const std::size_t i = pos - 1;
    b[i / 8] ^= static_cast<std::uint8_t>(0x80u >> (i % 8));
}

std::uint64_t read_slot(const Block& b, std::size_t slot, unsigned id_bits)
{
    const std::size_t width = id_bits / 8;
    const std::size_t off = (slot - 1) * width;
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i)
        v = (v << 8) | b[off + i];
    return v;
}

void write_slot(Block& b, std::size_t slot, unsigned id_bits, std::uint64_t value)
{
    const std::size_t width = id_bits / 8;
    const std::size_t off = (slot - 1) * width;
    for (std::size_t i = 0; i < width; ++i)
        b[off + width - 1 - i] = static_cast<std::uint8_t>(value >> (8 * i));
}

} // namespace dsse
