#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace dsse {

/// Flat `key = value` engine configuration. Unknown keys are rejected.
///
///   m = 3
///   id_bits = 32
///   kappa = 256
///   upsilon = 6            # optional override
///   avg_w_bytes = 6
///   seed = 42              # optional, enables deterministic mode
///   auth = true
///   latency_us = 200       # optional, loopback transport with injected delay
///   threads = 3            # optional, region worker count (default m)
struct EngineConfig
{
    unsigned m = 1;
    unsigned id_bits = 32;
    std::optional<std::uint64_t> upsilon_override;
    std::size_t avg_w = 6;
    std::optional<std::uint64_t> seed;
    bool auth = false;
    std::optional<std::uint32_t> latency_us;
    std::optional<unsigned> threads;

    void validate() const;

    static EngineConfig parse(std::string_view text);
    static EngineConfig load(const std::filesystem::path& path);
    std::string serialize() const;

    bool operator==(const EngineConfig&) const = default;
};

} // namespace dsse
