#pragma once

#include "dsse/bytes.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dsse {

// Length-prefixed binary records grouped into sections:
//
//   section := magic(4) || count(8, BE) || record*
//   record  := field_count(4, BE) || (length(4, BE) || bytes)*
//
// Snapshots, deletion tokens and addition exchange files all use it.

using Record = std::vector<Bytes>;

class RecordWriter
{
public:
    void section(std::string_view magic, const std::vector<Record>& records);
    const Bytes& bytes() const { return out_; }
    void save(const std::filesystem::path& path) const;

private:
    Bytes out_;
};

class RecordReader
{
public:
    explicit RecordReader(Bytes data) : data_(std::move(data)) {}
    static RecordReader load(const std::filesystem::path& path);

    /// Throws DecodeError when the next section has a different magic.
    std::vector<Record> section(std::string_view magic);
    bool done() const { return pos_ == data_.size(); }

private:
    Bytes data_;
    std::size_t pos_ = 0;
};

Bytes field(std::string_view s);
Bytes field_u64(std::uint64_t v);
std::string as_string(const Bytes& b);
std::uint64_t as_u64(const Bytes& b);

} // namespace dsse
