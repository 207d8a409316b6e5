#include "dsse/crypto.hpp"

#include "dsse/errors.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <fstream>
#include <sstream>

namespace dsse {

namespace {

constexpr std::size_t kNonceBytes = 16;
constexpr std::size_t kMacBytes = 32;
constexpr std::size_t kDeletionOracleBytes = 40;

Bytes message_with_label(std::string_view label, ByteView payload)
{
    Bytes msg(label.begin(), label.end());
    msg.push_back(0);
    msg.insert(msg.end(), payload.begin(), payload.end());
    return msg;
}

Bytes message_with_label(std::string_view label, std::string_view payload)
{
    return message_with_label(label, ByteView(reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
}

Bytes oracle_message(OracleLabel label, std::uint64_t input)
{
    Bytes msg;
    msg.reserve(12);
    const char* name = label == OracleLabel::Search ? "O_S" : "O_D";
    msg.insert(msg.end(), name, name + 3);
    msg.push_back(0);
    put_be64(msg, input);
    return msg;
}

struct MdCtx
{
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    MdCtx() = default;
    ~MdCtx() { EVP_MD_CTX_free(ctx); }
    MdCtx(const MdCtx&) = delete;
    MdCtx& operator=(const MdCtx&) = delete;
};

} // namespace

// ---------------------------------------------------------------------------

std::uint64_t RandomSource::next_u64()
{
    std::array<std::uint8_t, 8> b{};
    fill(b);
    return get_be64(b, 0);
}

Block RandomSource::next_block()
{
    Block b{};
    fill(b);
    return b;
}

void SystemRandom::fill(std::span<std::uint8_t> out)
{
    if (out.empty())
        return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
        throw Error("RAND_bytes failed");
}

DeterministicRandom::DeterministicRandom(std::uint64_t seed, std::string_view label)
{
    Bytes seed_bytes;
    put_be64(seed_bytes, seed);
    auto k = hmac_sha256(seed_bytes, message_with_label("dsse-drbg", label));
    key_ = fixed_from_view<SecretKeyTag>(k);
}

void DeterministicRandom::fill(std::span<std::uint8_t> out)
{
    std::lock_guard lock(mu_);
    for (auto& byte : out) {
        if (used_ == buffer_.size()) {
            Bytes ctr;
            put_be64(ctr, counter_++);
            buffer_ = to_block(hmac_sha256(key_.view(), ctr));
            used_ = 0;
        }
        byte = buffer_[used_++];
    }
}

std::unique_ptr<RandomSource> make_random(std::optional<std::uint64_t> seed, std::string_view label)
{
    if (seed)
        return std::make_unique<DeterministicRandom>(*seed, label);
    return std::make_unique<SystemRandom>();
}

// ---------------------------------------------------------------------------

const GroupKeys& KeyRing::group(const GroupId& g) const
{
    auto it = groups.find(g);
    if (it == groups.end())
        throw DomainError("no key for group " + g);
    return it->second;
}

std::string KeyRing::serialize() const
{
    std::ostringstream out;
    out << "# dsse key ring\n";
    out << "K_t = " << to_hex(tag) << "\n";
    out << "K_p = " << to_hex(payload) << "\n";
    out << "K_o = " << to_hex(owner) << "\n";
    out << "K_D = " << to_hex(doc_name) << "\n";
    out << "K_A = " << to_hex(address) << "\n";
    out << "K_coll = " << to_hex(collection) << "\n";
    for (const auto& [g, k] : groups)
        out << "group " << g << " = " << to_hex(k.index) << " " << to_hex(k.collection) << "\n";
    return out.str();
}

KeyRing KeyRing::parse(std::string_view text)
{
    KeyRing ring;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        auto eq = line.find(" = ");
        if (eq == std::string::npos)
            throw DecodeError("key file: malformed line: " + line);
        std::string label = line.substr(0, eq);
        std::string value = line.substr(eq + 3);
        if (label.rfind("group ", 0) == 0) {
            auto sp = value.find(' ');
            if (sp == std::string::npos)
                throw DecodeError("key file: group entry needs two keys");
            GroupKeys gk{fixed_from_hex<SecretKeyTag>(value.substr(0, sp)),
                         fixed_from_hex<SecretKeyTag>(value.substr(sp + 1))};
            ring.groups[label.substr(6)] = gk;
            continue;
        }
        if (value.size() != 64)
            throw DecodeError("key file: " + label + " must be 64 hex digits");
        auto key = fixed_from_hex<SecretKeyTag>(value);
        if (label == "K_t")
            ring.tag = key;
        else if (label == "K_p")
            ring.payload = key;
        else if (label == "K_o")
            ring.owner = key;
        else if (label == "K_D")
            ring.doc_name = key;
        else if (label == "K_A")
            ring.address = key;
        else if (label == "K_coll")
            ring.collection = key;
        else
            throw DecodeError("key file: unknown label " + label);
        seen.insert(label);
    }
    if (seen.size() != 6)
        throw DecodeError("key file: missing master keys");
    return ring;
}

void KeyRing::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write key file " + path.string());
    out << serialize();
}

KeyRing KeyRing::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open key file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

KeyRing keygen(const std::set<GroupId>& groups, std::optional<std::uint64_t> seed)
{
    auto rng = make_random(seed, "keygen");
    auto next = [&] {
        SecretKey k;
        rng->fill(k.bytes);
        return k;
    };
    KeyRing ring;
    ring.tag = next();
    ring.payload = next();
    ring.owner = next();
    ring.doc_name = next();
    ring.address = next();
    ring.collection = next();
    for (const auto& g : groups) {
        GroupKeys gk;
        gk.index = next();
        gk.collection = next();
        ring.groups.emplace(g, gk);
    }
    return ring;
}

// ---------------------------------------------------------------------------

Bytes hmac_sha256(ByteView key, ByteView message)
{
    Bytes out(32);
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(), out.data(),
              &len))
        throw Error("HMAC-SHA256 failed");
    return out;
}

Bytes hmac_sha512(ByteView key, ByteView message)
{
    Bytes out(64);
    unsigned int len = 0;
    if (!HMAC(EVP_sha512(), key.data(), static_cast<int>(key.size()), message.data(), message.size(), out.data(),
              &len))
        throw Error("HMAC-SHA512 failed");
    return out;
}

Tag prf_tag(const SecretKey& key, std::string_view input)
{
    return fixed_from_view<KeywordTagTag>(hmac_sha256(key.view(), message_with_label("Phi", input)));
}

OracleKey derive_oracle_key(const SecretKey& key, std::string_view input)
{
    return fixed_from_view<OracleKeyTag>(hmac_sha256(key.view(), message_with_label("Psi", input)));
}

// ---------------------------------------------------------------------------

void MaskRecorder::record(const OracleKey& key, std::uint64_t input, ByteView plaintext)
{
    std::lock_guard lock(mu_);
    auto [it, inserted] = seen_.try_emplace({key, input}, Bytes(plaintext.begin(), plaintext.end()));
    if (!inserted && !std::equal(it->second.begin(), it->second.end(), plaintext.begin(), plaintext.end()))
        ++conflicts_;
}

std::size_t MaskRecorder::conflicts() const
{
    std::lock_guard lock(mu_);
    return conflicts_;
}

std::size_t MaskRecorder::size() const
{
    std::lock_guard lock(mu_);
    return seen_.size();
}

RandomOracle::RandomOracle(OracleLabel label)
    : label_(label), out_bytes_(label == OracleLabel::Search ? kKappaBytes : kDeletionOracleBytes)
{
}

Bytes RandomOracle::hash(const OracleKey& key, std::uint64_t input) const
{
    auto msg = oracle_message(label_, input);
    if (label_ == OracleLabel::Search)
        return hmac_sha256(key.view(), msg);
    auto wide = hmac_sha512(key.view(), msg);
    wide.resize(out_bytes_);
    return wide;
}

Bytes RandomOracle::query(const OracleKey& key, std::uint64_t input) const
{
    if (has_table_.load(std::memory_order_acquire)) {
        std::shared_lock lock(mu_);
        auto it = table_.find({key, input});
        if (it != table_.end())
            return it->second;
    }
    return hash(key, input);
}

void RandomOracle::program(const OracleKey& key, std::uint64_t input, ByteView value)
{
    if (value.size() != out_bytes_)
        throw DomainError("programmed oracle value has wrong length");
    std::unique_lock lock(mu_);
    table_[{key, input}] = Bytes(value.begin(), value.end());
    has_table_.store(true, std::memory_order_release);
}

std::optional<Bytes> RandomOracle::programmed(const OracleKey& key, std::uint64_t input) const
{
    std::shared_lock lock(mu_);
    auto it = table_.find({key, input});
    if (it == table_.end())
        return std::nullopt;
    return it->second;
}

std::size_t RandomOracle::programmed_count() const
{
    std::shared_lock lock(mu_);
    return table_.size();
}

void RandomOracle::note_mask(const OracleKey& key, std::uint64_t input, ByteView plaintext) const
{
    if (recorder_)
        recorder_->record(key, input, plaintext);
}

// ---------------------------------------------------------------------------

struct OracleSession::State
{
    MdCtx inner;
    MdCtx outer;
    MdCtx scratch;
};

OracleSession::OracleSession(const RandomOracle& oracle, const OracleKey& key)
    : oracle_(&oracle), key_(key), state_(std::make_unique<State>())
{
    if (oracle.label() != OracleLabel::Search)
        throw DomainError("oracle sessions are only defined for O_S");
    std::array<std::uint8_t, 64> ipad{};
    std::array<std::uint8_t, 64> opad{};
    for (std::size_t i = 0; i < 64; ++i) {
        const std::uint8_t k = i < key.bytes.size() ? key.bytes[i] : 0;
        ipad[i] = k ^ 0x36;
        opad[i] = k ^ 0x5c;
    }
    if (EVP_DigestInit_ex(state_->inner.ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(state_->inner.ctx, ipad.data(), ipad.size()) != 1 ||
        EVP_DigestInit_ex(state_->outer.ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(state_->outer.ctx, opad.data(), opad.size()) != 1)
        throw Error("digest init failed");
}

OracleSession::~OracleSession() = default;
OracleSession::OracleSession(OracleSession&&) noexcept = default;

Block OracleSession::block(std::uint64_t input) const
{
    if (oracle_->programmed_count() > 0) {
        if (auto v = oracle_->programmed(key_, input))
            return to_block(*v);
    }
    auto msg = oracle_message(OracleLabel::Search, input);
    std::array<std::uint8_t, 32> inner_hash{};
    Block out{};
    unsigned int len = 0;
    EVP_MD_CTX* s = state_->scratch.ctx;
    if (EVP_MD_CTX_copy_ex(s, state_->inner.ctx) != 1 || EVP_DigestUpdate(s, msg.data(), msg.size()) != 1 ||
        EVP_DigestFinal_ex(s, inner_hash.data(), &len) != 1 || EVP_MD_CTX_copy_ex(s, state_->outer.ctx) != 1 ||
        EVP_DigestUpdate(s, inner_hash.data(), inner_hash.size()) != 1 ||
        EVP_DigestFinal_ex(s, out.data(), &len) != 1)
        throw Error("oracle digest failed");
    return out;
}

// ---------------------------------------------------------------------------

MaskedBlock mask_block(const Block& plain, const OracleKey& key, std::uint32_t index, const RandomOracle& oracle)
{
    if (oracle.output_bytes() != kKappaBytes)
        throw DomainError("block masking needs a kappa-bit oracle");
    auto pad = oracle.query(key, index);
    oracle.note_mask(key, index, plain);
    MaskedBlock out;
    out.index = index;
    out.ciphertext = xor_blocks(plain, to_block(pad));
    return out;
}

MaskedBlock mask_block(ByteView plain, const OracleKey& key, std::uint32_t index, const RandomOracle& oracle)
{
    if (plain.size() != kKappaBytes)
        throw DomainError("block must be exactly kappa bits, got " + std::to_string(plain.size() * 8));
    return mask_block(to_block(plain), key, index, oracle);
}

Block unmask_block(const MaskedBlock& masked, const OracleKey& key, const RandomOracle& oracle)
{
    return xor_blocks(masked.ciphertext, to_block(oracle.query(key, masked.index)));
}

// ---------------------------------------------------------------------------

namespace {

struct DocKeys
{
    Bytes enc;
    Bytes mac;
};

DocKeys document_keys(const SecretKey& key)
{
    return {hmac_sha256(key.view(), message_with_label("doc-enc", std::string_view{})),
            hmac_sha256(key.view(), message_with_label("doc-mac", std::string_view{}))};
}

Bytes aes_ctr(ByteView key, ByteView nonce, ByteView data)
{
    Bytes out(data.size());
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx)
        throw Error("cipher context allocation failed");
    int len = 0;
    int ok = EVP_EncryptInit_ex(ctx, EVP_aes_256_ctr(), nullptr, key.data(), nonce.data());
    if (ok == 1 && !data.empty())
        ok = EVP_EncryptUpdate(ctx, out.data(), &len, data.data(), static_cast<int>(data.size()));
    if (ok == 1)
        ok = EVP_EncryptFinal_ex(ctx, out.data() + len, &len);
    EVP_CIPHER_CTX_free(ctx);
    if (ok != 1)
        throw Error("AES-CTR failed");
    return out;
}

} // namespace

Bytes encrypt_document(const SecretKey& key, ByteView plaintext, RandomSource& rng)
{
    auto keys = document_keys(key);
    Bytes out(kNonceBytes);
    rng.fill(out);
    auto body = aes_ctr(keys.enc, ByteView(out.data(), kNonceBytes), plaintext);
    Bytes mac_input(out.begin(), out.end());
    mac_input.insert(mac_input.end(), body.begin(), body.end());
    auto mac = hmac_sha256(keys.mac, mac_input);
    out.insert(out.end(), mac.begin(), mac.end());
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Bytes decrypt_document(const SecretKey& key, ByteView ciphertext)
{
    if (ciphertext.size() < kDocumentHeaderBytes)
        throw IntegrityError("ciphertext shorter than its header");
    auto keys = document_keys(key);
    ByteView nonce = ciphertext.subspan(0, kNonceBytes);
    ByteView mac = ciphertext.subspan(kNonceBytes, kMacBytes);
    ByteView body = ciphertext.subspan(kDocumentHeaderBytes);
    Bytes mac_input(nonce.begin(), nonce.end());
    mac_input.insert(mac_input.end(), body.begin(), body.end());
    auto expect = hmac_sha256(keys.mac, mac_input);
    if (CRYPTO_memcmp(expect.data(), mac.data(), kMacBytes) != 0)
        throw IntegrityError("document authentication failed");
    return aes_ctr(keys.enc, nonce, body);
}

} // namespace dsse
