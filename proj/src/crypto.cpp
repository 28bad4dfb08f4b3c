#include "wstreamlet/crypto.hpp"

#include <openssl/evp.h>
#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace wstreamlet::crypto {

namespace {

EVP_MD_CTX* tls_ctx() {
    thread_local EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    return ctx;
}

// splitmix64 finalizer; used only to widen a digest to 64 signature bytes.
uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

Digest Digest::from_hex_string(const std::string& s) {
    Bytes b = from_hex(s);
    if (b.size() != kDigestSize) throw std::invalid_argument("digest hex must be 32 bytes");
    Digest d;
    std::memcpy(d.bytes.data(), b.data(), kDigestSize);
    return d;
}

Digest hash(ByteView data) {
    Digest out;
    EVP_MD_CTX* ctx = tls_ctx();
    if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, out.bytes.data(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    return out;
}

Hasher::Hasher() : ctx_(EVP_MD_CTX_new()) {
    if (EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 init failed");
}

Hasher::~Hasher() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Hasher& Hasher::update(ByteView data) {
    if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(), data.size()) != 1)
        throw std::runtime_error("sha256 update failed");
    return *this;
}

Hasher& Hasher::update_u64_be(uint64_t v) {
    uint8_t buf[8];
    write_u64_be(buf, v);
    return update(ByteView(buf, 8));
}

Digest Hasher::finish() {
    Digest out;
    if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.bytes.data(), nullptr) != 1)
        throw std::runtime_error("sha256 final failed");
    return out;
}

double hash_nor(uint64_t epoch, const PublicKeyId& pk) {
    uint8_t buf[8 + kDigestSize];
    write_u64_be(buf, epoch);
    std::memcpy(buf + 8, pk.bytes.data(), kDigestSize);
    Digest d = hash(ByteView(buf, sizeof buf));
    uint64_t x = read_u64_be(d.bytes.data());
    // (x+1)/2^64 in (0, 1]; 80-bit intermediate keeps x+1 = 2^64 exact.
    return static_cast<double>((static_cast<long double>(x) + 1.0L) * 0x1.0p-64L);
}

// --- Merkle -----------------------------------------------------------------

namespace {

Digest leaf_node(const Digest& leaf) {
    uint8_t buf[1 + kDigestSize];
    buf[0] = 0x00;
    std::memcpy(buf + 1, leaf.bytes.data(), kDigestSize);
    return hash(ByteView(buf, sizeof buf));
}

Digest interior_node(const Digest& l, const Digest& r) {
    uint8_t buf[1 + 2 * kDigestSize];
    buf[0] = 0x01;
    std::memcpy(buf + 1, l.bytes.data(), kDigestSize);
    std::memcpy(buf + 1 + kDigestSize, r.bytes.data(), kDigestSize);
    return hash(ByteView(buf, sizeof buf));
}

}  // namespace

Digest merkle_root(const std::vector<Digest>& leaves) {
    if (leaves.empty()) throw std::invalid_argument("merkle_root: no leaves");
    std::vector<Digest> level;
    level.reserve(leaves.size());
    for (const Digest& l : leaves) level.push_back(leaf_node(l));
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        std::vector<Digest> next;
        next.reserve(level.size() / 2);
        for (size_t i = 0; i < level.size(); i += 2) next.push_back(interior_node(level[i], level[i + 1]));
        level = std::move(next);
    }
    return level[0];
}

MerkleProof merkle_prove(const std::vector<Digest>& leaves, uint64_t index) {
    if (index >= leaves.size()) throw std::invalid_argument("merkle_prove: index out of range");
    MerkleProof proof;
    proof.leaf_index = index;
    proof.tree_size = leaves.size();
    std::vector<Digest> level;
    level.reserve(leaves.size());
    for (const Digest& l : leaves) level.push_back(leaf_node(l));
    uint64_t idx = index;
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        proof.siblings.push_back(level[idx ^ 1]);
        std::vector<Digest> next;
        next.reserve(level.size() / 2);
        for (size_t i = 0; i < level.size(); i += 2) next.push_back(interior_node(level[i], level[i + 1]));
        level = std::move(next);
        idx >>= 1;
    }
    return proof;
}

bool merkle_verify(const Digest& root, const Digest& leaf, const MerkleProof& proof) {
    if (proof.tree_size == 0 || proof.leaf_index >= proof.tree_size) return false;
    // Padded-tree depth: ceil(log2(tree_size)).
    uint64_t depth = 0;
    while ((1ull << depth) < proof.tree_size) ++depth;
    if (proof.siblings.size() != depth) return false;
    Digest cur = leaf_node(leaf);
    uint64_t idx = proof.leaf_index;
    for (const Digest& sib : proof.siblings) {
        cur = (idx & 1) ? interior_node(sib, cur) : interior_node(cur, sib);
        idx >>= 1;
    }
    return cur == root;
}

// --- KeyedHashScheme --------------------------------------------------------

KeyPair KeyedHashScheme::generate_key(ByteView label) {
    Hasher hs;
    hs.update(ByteView(reinterpret_cast<const uint8_t*>("wsl/secret/"), 11)).update(label);
    Digest sk = hs.finish();
    Hasher hp;
    hp.update(ByteView(reinterpret_cast<const uint8_t*>("wsl/public/"), 11)).update(sk.bytes);
    Digest pk = hp.finish();
    KeyPair kp;
    std::memcpy(kp.id.bytes.data(), pk.bytes.data(), kDigestSize);
    kp.secret.assign(sk.bytes.begin(), sk.bytes.end());
    registry_[kp.id] = kp.secret;
    return kp;
}

Signature KeyedHashScheme::sign(ByteView payload, const SecretKey& secret) const {
    Hasher h;
    h.update(secret).update(payload);
    Digest core = h.finish();
    Signature sig{};
    std::memcpy(sig.data(), core.bytes.data(), kDigestSize);
    // Second half: secret-keyed widening of the core digest. Cheap, but still
    // requires the secret, which is all the simulation boundary needs.
    uint64_t k0, k1, c0, c1;
    std::memcpy(&k0, secret.data(), 8);
    std::memcpy(&k1, secret.data() + 8, 8);
    std::memcpy(&c0, core.bytes.data(), 8);
    std::memcpy(&c1, core.bytes.data() + 8, 8);
    uint64_t m0 = mix64(c0 ^ k0);
    uint64_t m1 = mix64(c1 ^ k1 ^ m0);
    uint64_t m2 = mix64(m0 ^ k1);
    uint64_t m3 = mix64(m1 ^ k0);
    std::memcpy(sig.data() + 32, &m0, 8);
    std::memcpy(sig.data() + 40, &m1, 8);
    std::memcpy(sig.data() + 48, &m2, 8);
    std::memcpy(sig.data() + 56, &m3, 8);
    return sig;
}

bool KeyedHashScheme::verify(ByteView payload, const PublicKeyId& signer, const Signature& sig) const {
    auto it = registry_.find(signer);
    if (it == registry_.end()) return false;
    Signature expect = sign(payload, it->second);
    return std::memcmp(expect.data(), sig.data(), kSignatureSize) == 0;
}

// --- Ed25519Scheme ----------------------------------------------------------

Ed25519Scheme::Ed25519Scheme() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
}

KeyPair Ed25519Scheme::generate_key(ByteView label) {
    Hasher h;
    h.update(ByteView(reinterpret_cast<const uint8_t*>("wsl/ed25519/"), 12)).update(label);
    Digest seed = h.finish();
    unsigned char pk[crypto_sign_PUBLICKEYBYTES];
    unsigned char sk[crypto_sign_SECRETKEYBYTES];
    crypto_sign_seed_keypair(pk, sk, seed.bytes.data());
    KeyPair kp;
    static_assert(crypto_sign_PUBLICKEYBYTES == kDigestSize);
    std::memcpy(kp.id.bytes.data(), pk, kDigestSize);
    kp.secret.assign(sk, sk + crypto_sign_SECRETKEYBYTES);
    return kp;
}

Signature Ed25519Scheme::sign(ByteView payload, const SecretKey& secret) const {
    if (secret.size() != crypto_sign_SECRETKEYBYTES) throw std::invalid_argument("bad ed25519 secret");
    Signature sig{};
    static_assert(crypto_sign_BYTES == kSignatureSize);
    crypto_sign_detached(sig.data(), nullptr, payload.data(), payload.size(), secret.data());
    return sig;
}

bool Ed25519Scheme::verify(ByteView payload, const PublicKeyId& signer, const Signature& sig) const {
    return crypto_sign_verify_detached(sig.data(), payload.data(), payload.size(), signer.bytes.data()) == 0;
}

}  // namespace wstreamlet::crypto
