#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "wstreamlet/bytes.hpp"

namespace wstreamlet::crypto {

constexpr size_t kDigestSize = 32;
constexpr size_t kSignatureSize = 64;

struct Digest {
    std::array<uint8_t, kDigestSize> bytes{};

    bool operator==(const Digest&) const = default;
    auto operator<=>(const Digest&) const = default;
    bool is_zero() const {
        for (uint8_t b : bytes)
            if (b != 0) return false;
        return true;
    }
    std::string hex() const { return to_hex(bytes); }
    static Digest from_hex_string(const std::string& s);
};

struct DigestHasher {
    size_t operator()(const Digest& d) const {
        uint64_t v;
        std::memcpy(&v, d.bytes.data(), sizeof(v));
        return static_cast<size_t>(v);
    }
};

// Node identity; compared lexicographically (tie-breaks in leader election).
struct PublicKeyId {
    std::array<uint8_t, kDigestSize> bytes{};

    bool operator==(const PublicKeyId&) const = default;
    auto operator<=>(const PublicKeyId&) const = default;
    std::string hex() const { return to_hex(bytes); }
};

struct PublicKeyIdHasher {
    size_t operator()(const PublicKeyId& k) const {
        uint64_t v;
        std::memcpy(&v, k.bytes.data(), sizeof(v));
        return static_cast<size_t>(v);
    }
};

using Signature = std::array<uint8_t, kSignatureSize>;

struct SignedEnvelope {
    Bytes payload;
    PublicKeyId signer;
    Signature signature{};
};

// SHA-256. One hash function is used for every digest in the system.
Digest hash(ByteView data);

// Incremental variant for composite inputs; avoids concatenation copies.
class Hasher {
  public:
    Hasher();
    ~Hasher();
    Hasher(const Hasher&) = delete;
    Hasher& operator=(const Hasher&) = delete;
    Hasher& update(ByteView data);
    Hasher& update_u64_be(uint64_t v);
    Digest finish();

  private:
    void* ctx_;
};

// Per-epoch, per-identity uniform draw on (0, 1]: the first 8 bytes of
// hash(be64(epoch) || pk), read big-endian as x, mapped to (x+1)/2^64.
// Never returns 0, so -log is always finite.
double hash_nor(uint64_t epoch, const PublicKeyId& pk);

// --- Merkle tree (domain-separated, duplicate-last padding) ---------------
//
// Leaf nodes hash with a 0x00 prefix and interior nodes with 0x01, so a leaf
// digest can never be reinterpreted as an interior node. Odd levels duplicate
// their last element.

struct MerkleProof {
    uint64_t leaf_index = 0;
    uint64_t tree_size = 0;
    std::vector<Digest> siblings;
};

Digest merkle_root(const std::vector<Digest>& leaves);
MerkleProof merkle_prove(const std::vector<Digest>& leaves, uint64_t index);
bool merkle_verify(const Digest& root, const Digest& leaf, const MerkleProof& proof);

// --- Signature schemes ------------------------------------------------------

using SecretKey = Bytes;

struct KeyPair {
    PublicKeyId id;
    SecretKey secret;
};

// Interface kept minimal so the simulation default (keyed-hash stand-in) and
// a real asymmetric scheme are interchangeable.
class SignatureScheme {
  public:
    virtual ~SignatureScheme() = default;
    virtual const char* name() const = 0;
    // Deterministic: the same label always yields the same key pair.
    virtual KeyPair generate_key(ByteView label) = 0;
    virtual Signature sign(ByteView payload, const SecretKey& secret) const = 0;
    virtual bool verify(ByteView payload, const PublicKeyId& signer, const Signature& sig) const = 0;
};

// Simulation default. sign = SHA-256(secret || payload) expanded to 64 bytes
// with a secret-keyed mix; verify recomputes through a registry of known
// signers. Unforgeable within the simulation trust boundary: producing a
// valid signature requires the signer's secret, and an unknown signer fails.
class KeyedHashScheme : public SignatureScheme {
  public:
    const char* name() const override { return "keyed-hash"; }
    KeyPair generate_key(ByteView label) override;
    Signature sign(ByteView payload, const SecretKey& secret) const override;
    bool verify(ByteView payload, const PublicKeyId& signer, const Signature& sig) const override;

  private:
    std::unordered_map<PublicKeyId, SecretKey, PublicKeyIdHasher> registry_;
};

// Real asymmetric scheme (Ed25519 via libsodium) behind the same interface.
class Ed25519Scheme : public SignatureScheme {
  public:
    Ed25519Scheme();
    const char* name() const override { return "ed25519"; }
    KeyPair generate_key(ByteView label) override;
    Signature sign(ByteView payload, const SecretKey& secret) const override;
    bool verify(ByteView payload, const PublicKeyId& signer, const Signature& sig) const override;
};

}  // namespace wstreamlet::crypto
