#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wstreamlet/chain.hpp"
#include "wstreamlet/crypto.hpp"
#include "wstreamlet/rng.hpp"

namespace wstreamlet::coding {

using crypto::Digest;
using crypto::MerkleProof;

// Systematic erasure code over GF(256): symbols 0..k-1 carry the source
// chunks verbatim; repair symbol k+r mixes the sources with the Cauchy row
// c_j = 1/(r XOR y_j), y_j = (256-k)+j. Every k x k submatrix of the
// generator is invertible, so any k distinct symbols reconstruct the payload
// and rank failures can only come from duplicated symbol indices. Symbol
// indices are capped at 256 total.
constexpr size_t kMaxTotalSymbols = 256;

struct EncodedSymbol {
    Digest payload_id;
    uint32_t index = 0;   // < k: systematic; >= k: repair
    uint32_t k = 0;       // source symbol count
    uint32_t total = 0;   // symbols generated for this payload (m)
    uint32_t b_sym = 0;   // symbol payload bytes
    uint64_t payload_len = 0;
    bool systematic = false;
    Bytes data;

    Bytes encode() const;  // container format, stable across versions
    static std::optional<EncodedSymbol> decode(ByteView raw);
};

// Per-payload commitment: leaf i is hash(payload_id || be64(i) || data_i);
// the root binds the whole symbol set.
struct CommitmentBundle {
    Digest payload_id;
    uint32_t k = 0;
    uint32_t total = 0;
    std::vector<Digest> symbol_digests;
    Digest root;

    Bytes encode() const;
    static std::optional<CommitmentBundle> decode(ByteView raw);
};

// Coefficient row of symbol `index` over the k sources.
std::vector<uint8_t> coefficient_row(uint32_t k, uint32_t index);

// Splits into k = ceil(len / b_sym) chunks, zero-padding the last.
std::vector<Bytes> split_payload(ByteView payload, uint32_t b_sym);

// Generates `total` symbols (k systematic + repair).
std::vector<EncodedSymbol> encode_symbols(const Digest& payload_id, ByteView payload,
                                          uint32_t b_sym, uint32_t total);

Digest symbol_digest(const EncodedSymbol& s);
CommitmentBundle make_commitment(const std::vector<EncodedSymbol>& symbols);
MerkleProof symbol_proof(const CommitmentBundle& bundle, uint32_t index);
bool verify_symbol(const EncodedSymbol& s, const Digest& root, const MerkleProof& proof);

// Gaussian elimination over the received rows. Returns the payload when the
// rows reach rank k; a rank-deficient set (duplicated indices) is a decode
// failure, reported as nullopt so the caller can fetch more symbols.
std::optional<Bytes> decode_payload(const std::vector<EncodedSymbol>& symbols);

// ceil(k * (1 + epsilon)) with a tolerance guard against representation
// artifacts in k * epsilon.
uint32_t required_symbols(uint32_t k, double epsilon);

// True iff the decode threshold survives f_s storage-node failures:
// required_symbols(k, epsilon) <= s - f_s.
bool availability_check(uint32_t k, double epsilon, uint32_t s, uint32_t f_s);

// --- Retrieval simulation ----------------------------------------------------
//
// Deterministic FIFO discrete-event model. All transfers share one wireless
// medium of `bandwidth` bytes/s, so concurrent lanes pipeline request
// overhead but serialize payload bytes. Each attempt moves b_obj bytes and
// succeeds with probability 1 - per; a symbol is retried up to
// attempts_per_symbol times in total. Coded mode requests the m symbols in
// index order and stops at k_req verified; replication mode needs all k
// source fragments. A run that cannot reach its target reports failure with
// latency t_max (the requester holds its deadline before giving up).
struct RetrievalParams {
    uint32_t k = 6;
    uint32_t k_req = 7;
    uint32_t total = 10;              // m, symbols available in coded mode
    uint32_t attempts_per_symbol = 2;  // r
    uint32_t lanes = 4;                // c
    double per = 0.0;                  // packet erasure rate per attempt
    uint64_t b_obj = 204928;           // symbol + proof bytes on the wire
    double bandwidth_Bps = 1250000.0;  // bytes/s
    double per_request_overhead_s = 0.010;
    double t_max_s = 6.0;
    bool coded = true;
};

struct RetrievalResult {
    bool success = false;
    double latency_s = 0.0;
    uint32_t symbols_fetched = 0;
    uint32_t attempts = 0;
};

RetrievalResult simulate_retrieval(const RetrievalParams& p, RngStream rng);

// --- Storage and bootstrap accounting ---------------------------------------

enum class StorageMode { Replication, Coded };

// Bytes held per storage node at the given chain height. Replication stores
// every payload everywhere; the coded plane spreads m/k expansion over s
// nodes.
double per_node_storage_bytes(StorageMode mode, uint64_t height, uint64_t payload_bytes,
                              uint32_t k, uint32_t total, uint32_t s);

enum class BootstrapMode { Full, StateFirst };

// Seconds to bring a new node to the given height: full replay moves headers
// and payloads, state-first defers payloads. Both pay a per-block handshake
// overhead.
double bootstrap_duration_s(BootstrapMode mode, uint64_t height, uint64_t header_bytes,
                            uint64_t payload_bytes, double bandwidth_Bps,
                            double per_block_overhead_s);

// Payload ids safe to delete: blocks that are not on the finalized path and
// sit strictly below the finalized tip's epoch can never be finalized, so
// their payloads are dead weight. Blocks at or above the finalized epoch are
// kept even off-path.
std::vector<Digest> prune_candidates(const chain::ChainState& view);

}  // namespace wstreamlet::coding
