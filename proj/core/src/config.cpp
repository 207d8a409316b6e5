#include "dsse/config.hpp"

#include "dsse/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dsse {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v)
{
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError("'" + std::string(key) + "' expects an unsigned integer, got '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw ConfigError("'" + std::string(key) + "' expects true or false");
}

} // namespace

void EngineConfig::validate() const
{
    if (m < 1 || m > 65535)
        throw ConfigError("m must be in 1..65535");
    if (id_bits != 16 && id_bits != 32 && id_bits != 64)
        throw ConfigError("id_bits must be 16, 32 or 64");
    if (upsilon_override && *upsilon_override < 1)
        throw ConfigError("upsilon must be >= 1");
    if (avg_w < 1)
        throw ConfigError("avg_w_bytes must be >= 1");
    if (threads && *threads < 1)
        throw ConfigError("threads must be >= 1");
}

EngineConfig EngineConfig::parse(std::string_view text)
{
    EngineConfig cfg;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key == "m")
            cfg.m = static_cast<unsigned>(parse_uint(key, value));
        else if (key == "id_bits")
            cfg.id_bits = static_cast<unsigned>(parse_uint(key, value));
        else if (key == "kappa") {
            if (parse_uint(key, value) != 256)
                throw ConfigError("kappa is fixed at 256");
        } else if (key == "upsilon")
            cfg.upsilon_override = parse_uint(key, value);
        else if (key == "avg_w_bytes")
            cfg.avg_w = parse_uint(key, value);
        else if (key == "seed")
            cfg.seed = parse_uint(key, value);
        else if (key == "auth")
            cfg.auth = parse_bool(key, value);
        else if (key == "latency_us")
            cfg.latency_us = static_cast<std::uint32_t>(parse_uint(key, value));
        else if (key == "threads")
            cfg.threads = static_cast<unsigned>(parse_uint(key, value));
        else
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + std::string(key) + "'");
    }
    cfg.validate();
    return cfg;
}

EngineConfig EngineConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string EngineConfig::serialize() const
{
    std::ostringstream out;
    out << "m = " << m << "\n";
    out << "id_bits = " << id_bits << "\n";
    out << "kappa = 256\n";
    if (upsilon_override)
        out << "upsilon = " << *upsilon_override << "\n";
    out << "avg_w_bytes = " << avg_w << "\n";
    if (seed)
        out << "seed = " << *seed << "\n";
    out << "auth = " << (auth ? "true" : "false") << "\n";
    if (latency_us)
        out << "latency_us = " << *latency_us << "\n";
    if (threads)
        out << "threads = " << *threads << "\n";
    return out.str();
}

} // namespace dsse
