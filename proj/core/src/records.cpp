#include "dsse/records.hpp"

#include "dsse/errors.hpp"

#include <fstream>
#include <iterator>

namespace dsse {

void RecordWriter::section(std::string_view magic, const std::vector<Record>& records)
{
    if (magic.size() != 4)
        throw DomainError("section magic must be 4 bytes");
    out_.insert(out_.end(), magic.begin(), magic.end());
    put_be64(out_, records.size());
    for (const auto& r : records) {
        put_be32(out_, static_cast<std::uint32_t>(r.size()));
        for (const auto& f : r) {
            put_be32(out_, static_cast<std::uint32_t>(f.size()));
            out_.insert(out_.end(), f.begin(), f.end());
        }
    }
}

void RecordWriter::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(out_.data()), static_cast<std::streamsize>(out_.size()));
    if (!out)
        throw Error("short write to " + path.string());
}

RecordReader RecordReader::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw NotFound("cannot read " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return RecordReader(std::move(data));
}

std::vector<Record> RecordReader::section(std::string_view magic)
{
    auto need = [&](std::size_t n) {
        if (data_.size() - pos_ < n)
            throw DecodeError("truncated record file");
    };
    need(12);
    if (std::string_view(reinterpret_cast<const char*>(data_.data() + pos_), 4) != magic)
        throw DecodeError("expected section " + std::string(magic));
    pos_ += 4;
    const std::uint64_t count = get_be64(data_, pos_);
    pos_ += 8;
    std::vector<Record> out;
    for (std::uint64_t i = 0; i < count; ++i) {
        need(4);
        const std::uint32_t fields = get_be32(data_, pos_);
        pos_ += 4;
        Record r;
        for (std::uint32_t f = 0; f < fields; ++f) {
            need(4);
            const std::uint32_t len = get_be32(data_, pos_);
            pos_ += 4;
            need(len);
            r.emplace_back(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                           data_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
            pos_ += len;
        }
        out.push_back(std::move(r));
    }
    return out;
}

Bytes field(std::string_view s)
{
    return Bytes(s.begin(), s.end());
}

Bytes field_u64(std::uint64_t v)
{
    Bytes b;
    put_be64(b, v);
    return b;
}

std::string as_string(const Bytes& b)
{
    return std::string(b.begin(), b.end());
}

std::uint64_t as_u64(const Bytes& b)
{
    if (b.size() != 8)
        throw DecodeError("expected an 8-byte integer field");
    return get_be64(b, 0);
}

} // namespace dsse
