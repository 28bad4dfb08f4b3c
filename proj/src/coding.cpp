#include "wstreamlet/coding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <stdexcept>

#include "wstreamlet/gf256.hpp"

namespace wstreamlet::coding {

namespace {

constexpr uint8_t kMagic[4] = {'W', 'S', 'Y', 'M'};
constexpr uint16_t kSymbolVersion = 1;
constexpr uint16_t kBundleVersion = 1;

}  // namespace

Bytes EncodedSymbol::encode() const {
    Bytes out;
    out.reserve(63 + data.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(static_cast<uint8_t>(kSymbolVersion >> 8));
    out.push_back(static_cast<uint8_t>(kSymbolVersion & 0xff));
    out.insert(out.end(), payload_id.bytes.begin(), payload_id.bytes.end());
    append_u32_be(out, k);
    append_u32_be(out, index);
    append_u32_be(out, total);
    append_u32_be(out, b_sym);
    append_u64_be(out, payload_len);
    out.push_back(systematic ? 1 : 0);
    out.insert(out.end(), data.begin(), data.end());
    return out;
}

std::optional<EncodedSymbol> EncodedSymbol::decode(ByteView raw) {
    if (raw.size() < 63) return std::nullopt;
    if (std::memcmp(raw.data(), kMagic, 4) != 0) return std::nullopt;
    uint16_t version = static_cast<uint16_t>((raw[4] << 8) | raw[5]);
    if (version != kSymbolVersion) return std::nullopt;
    EncodedSymbol s;
    std::memcpy(s.payload_id.bytes.data(), raw.data() + 6, 32);
    s.k = read_u32_be(raw.data() + 38);
    s.index = read_u32_be(raw.data() + 42);
    s.total = read_u32_be(raw.data() + 46);
    s.b_sym = read_u32_be(raw.data() + 50);
    s.payload_len = read_u64_be(raw.data() + 54);
    s.systematic = raw[62] != 0;
    if (raw.size() != 63 + static_cast<size_t>(s.b_sym)) return std::nullopt;
    if (s.systematic != (s.index < s.k)) return std::nullopt;
    s.data.assign(raw.begin() + 63, raw.end());
    return s;
}

Bytes CommitmentBundle::encode() const {
    Bytes out;
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(static_cast<uint8_t>(kBundleVersion >> 8));
    out.push_back(static_cast<uint8_t>(kBundleVersion & 0xff));
    out.insert(out.end(), payload_id.bytes.begin(), payload_id.bytes.end());
    append_u32_be(out, k);
    append_u32_be(out, total);
    out.insert(out.end(), root.bytes.begin(), root.bytes.end());
    for (const Digest& d : symbol_digests) out.insert(out.end(), d.bytes.begin(), d.bytes.end());
    return out;
}

std::optional<CommitmentBundle> CommitmentBundle::decode(ByteView raw) {
    if (raw.size() < 78) return std::nullopt;
    if (std::memcmp(raw.data(), kMagic, 4) != 0) return std::nullopt;
    uint16_t version = static_cast<uint16_t>((raw[4] << 8) | raw[5]);
    if (version != kBundleVersion) return std::nullopt;
    CommitmentBundle b;
    std::memcpy(b.payload_id.bytes.data(), raw.data() + 6, 32);
    b.k = read_u32_be(raw.data() + 38);
    b.total = read_u32_be(raw.data() + 42);
    std::memcpy(b.root.bytes.data(), raw.data() + 46, 32);
    if (raw.size() != 78 + static_cast<size_t>(b.total) * 32) return std::nullopt;
    for (uint32_t i = 0; i < b.total; ++i) {
        Digest d;
        std::memcpy(d.bytes.data(), raw.data() + 78 + i * 32, 32);
        b.symbol_digests.push_back(d);
    }
    return b;
}

std::vector<uint8_t> coefficient_row(uint32_t k, uint32_t index) {
    if (k == 0 || k >= kMaxTotalSymbols) throw std::invalid_argument("bad source count");
    std::vector<uint8_t> row(k, 0);
    if (index < k) {
        row[index] = 1;
        return row;
    }
    uint32_t r = index - k;
    if (k + r >= kMaxTotalSymbols) throw std::invalid_argument("symbol index exceeds field capacity");
    uint8_t base = static_cast<uint8_t>(kMaxTotalSymbols - k);
    for (uint32_t j = 0; j < k; ++j)
        row[j] = gf256::inv(static_cast<uint8_t>(r) ^ static_cast<uint8_t>(base + j));
    return row;
}

std::vector<Bytes> split_payload(ByteView payload, uint32_t b_sym) {
    if (b_sym == 0) throw std::invalid_argument("symbol size must be positive");
    if (payload.empty()) throw std::invalid_argument("empty payload");
    size_t k = (payload.size() + b_sym - 1) / b_sym;
    std::vector<Bytes> out(k);
    for (size_t i = 0; i < k; ++i) {
        size_t off = i * b_sym;
        size_t len = std::min<size_t>(b_sym, payload.size() - off);
        out[i].assign(payload.begin() + off, payload.begin() + off + len);
        out[i].resize(b_sym, 0);
    }
    return out;
}

std::vector<EncodedSymbol> encode_symbols(const Digest& payload_id, ByteView payload,
                                          uint32_t b_sym, uint32_t total) {
    std::vector<Bytes> sources = split_payload(payload, b_sym);
    uint32_t k = static_cast<uint32_t>(sources.size());
    if (total < k) throw std::invalid_argument("total symbols below source count");
    if (total > kMaxTotalSymbols) throw std::invalid_argument("too many symbols");
    std::vector<EncodedSymbol> out(total);
    for (uint32_t i = 0; i < total; ++i) {
        EncodedSymbol& s = out[i];
        s.payload_id = payload_id;
        s.index = i;
        s.k = k;
        s.total = total;
        s.b_sym = b_sym;
        s.payload_len = payload.size();
        s.systematic = i < k;
        if (i < k) {
            s.data = sources[i];
        } else {
            s.data.assign(b_sym, 0);
            std::vector<uint8_t> row = coefficient_row(k, i);
            for (uint32_t j = 0; j < k; ++j)
                gf256::mul_add(s.data.data(), sources[j].data(), row[j], b_sym);
        }
    }
    return out;
}

Digest symbol_digest(const EncodedSymbol& s) {
    crypto::Hasher h;
    h.update(s.payload_id.bytes).update_u64_be(s.index).update(s.data);
    return h.finish();
}

CommitmentBundle make_commitment(const std::vector<EncodedSymbol>& symbols) {
    if (symbols.empty()) throw std::invalid_argument("no symbols to commit");
    CommitmentBundle b;
    b.payload_id = symbols[0].payload_id;
    b.k = symbols[0].k;
    b.total = symbols[0].total;
    if (symbols.size() != b.total) throw std::invalid_argument("commitment needs the full symbol set");
    b.symbol_digests.reserve(symbols.size());
    for (const auto& s : symbols) {
        if (!(s.payload_id == b.payload_id) || s.k != b.k || s.total != b.total)
            throw std::invalid_argument("mixed symbol sets");
        b.symbol_digests.push_back(symbol_digest(s));
    }
    b.root = crypto::merkle_root(b.symbol_digests);
    return b;
}

MerkleProof symbol_proof(const CommitmentBundle& bundle, uint32_t index) {
    if (index >= bundle.symbol_digests.size()) throw std::invalid_argument("proof index out of range");
    return crypto::merkle_prove(bundle.symbol_digests, index);
}

bool verify_symbol(const EncodedSymbol& s, const Digest& root, const MerkleProof& proof) {
    if (proof.leaf_index != s.index) return false;
    return crypto::merkle_verify(root, symbol_digest(s), proof);
}

std::optional<Bytes> decode_payload(const std::vector<EncodedSymbol>& symbols) {
    if (symbols.empty()) return std::nullopt;
    const uint32_t k = symbols[0].k;
    const uint32_t b_sym = symbols[0].b_sym;
    const uint64_t payload_len = symbols[0].payload_len;
    for (const auto& s : symbols)
        if (!(s.payload_id == symbols[0].payload_id) || s.k != k || s.b_sym != b_sym ||
            s.payload_len != payload_len || s.data.size() != b_sym)
            return std::nullopt;

    // Row-reduce [coefficients | data] to identity on the left.
    struct Row {
        std::vector<uint8_t> coeff;
        Bytes data;
    };
    std::vector<Row> rows;
    rows.reserve(symbols.size());
    for (const auto& s : symbols) rows.push_back(Row{coefficient_row(k, s.index), s.data});

    size_t pivot_row = 0;
    std::vector<size_t> pivot_of_col(k, SIZE_MAX);
    for (uint32_t col = 0; col < k && pivot_row < rows.size(); ++col) {
        size_t sel = SIZE_MAX;
        for (size_t r = pivot_row; r < rows.size(); ++r)
            if (rows[r].coeff[col] != 0) {
                sel = r;
                break;
            }
        if (sel == SIZE_MAX) continue;
        std::swap(rows[pivot_row], rows[sel]);
        uint8_t piv = rows[pivot_row].coeff[col];
        uint8_t piv_inv = gf256::inv(piv);
        gf256::scale(rows[pivot_row].coeff.data(), piv_inv, k);
        gf256::scale(rows[pivot_row].data.data(), piv_inv, b_sym);
        for (size_t r = 0; r < rows.size(); ++r) {
            if (r == pivot_row) continue;
            uint8_t c = rows[r].coeff[col];
            if (c == 0) continue;
            gf256::mul_add(rows[r].coeff.data(), rows[pivot_row].coeff.data(), c, k);
            gf256::mul_add(rows[r].data.data(), rows[pivot_row].data.data(), c, b_sym);
        }
        pivot_of_col[col] = pivot_row;
        ++pivot_row;
    }
    for (uint32_t col = 0; col < k; ++col)
        if (pivot_of_col[col] == SIZE_MAX) return std::nullopt;  // rank deficient

    Bytes payload;
    payload.reserve(static_cast<size_t>(k) * b_sym);
    for (uint32_t col = 0; col < k; ++col) {
        const Bytes& d = rows[pivot_of_col[col]].data;
        payload.insert(payload.end(), d.begin(), d.end());
    }
    if (payload_len > payload.size()) return std::nullopt;
    payload.resize(payload_len);
    return payload;
}

uint32_t required_symbols(uint32_t k, double epsilon) {
    if (epsilon < 0.0) throw std::invalid_argument("negative redundancy margin");
    double extra = std::ceil(k * epsilon - 1e-9);
    if (extra < 0.0) extra = 0.0;
    return k + static_cast<uint32_t>(extra);
}

bool availability_check(uint32_t k, double epsilon, uint32_t s, uint32_t f_s) {
    if (f_s >= s) return false;
    return required_symbols(k, epsilon) <= s - f_s;
}

RetrievalResult simulate_retrieval(const RetrievalParams& p, RngStream rng) {
    if (p.lanes == 0 || p.attempts_per_symbol == 0 || p.bandwidth_Bps <= 0.0)
        throw std::invalid_argument("bad retrieval parameters");
    const uint32_t want = p.coded ? p.k_req : p.k;
    const uint32_t candidates = p.coded ? p.total : p.k;
    const double busy = static_cast<double>(p.b_obj) / p.bandwidth_Bps;

    RetrievalResult res;
    if (want > candidates) {
        res.latency_s = p.t_max_s;
        return res;
    }
    std::deque<uint32_t> queue;
    for (uint32_t i = 0; i < candidates; ++i) queue.push_back(i);
    std::vector<uint32_t> attempts_used(candidates, 0);
    double medium_time = 0.0;

    while (!queue.empty()) {
        uint32_t sym = queue.front();
        queue.pop_front();
        medium_time += busy;
        double finish = medium_time + p.per_request_overhead_s;
        // A single lane cannot issue the next request until this one returns.
        if (p.lanes == 1) medium_time = finish;
        if (finish > p.t_max_s) break;
        ++res.attempts;
        ++attempts_used[sym];
        RngStream draw = rng.derive(sym, attempts_used[sym]);
        if (draw.next_unit() >= p.per) {
            ++res.symbols_fetched;
            if (res.symbols_fetched >= want) {
                res.success = true;
                res.latency_s = finish;
                return res;
            }
        } else if (attempts_used[sym] < p.attempts_per_symbol) {
            queue.push_back(sym);
        }
    }
    res.latency_s = p.t_max_s;
    return res;
}

double per_node_storage_bytes(StorageMode mode, uint64_t height, uint64_t payload_bytes,
                              uint32_t k, uint32_t total, uint32_t s) {
    if (k == 0 || s == 0) throw std::invalid_argument("bad storage parameters");
    double per_block = static_cast<double>(payload_bytes);
    if (mode == StorageMode::Replication) return static_cast<double>(height) * per_block;
    double expansion = static_cast<double>(total) / static_cast<double>(k);
    return static_cast<double>(height) * per_block * expansion / static_cast<double>(s);
}

double bootstrap_duration_s(BootstrapMode mode, uint64_t height, uint64_t header_bytes,
                            uint64_t payload_bytes, double bandwidth_Bps,
                            double per_block_overhead_s) {
    if (bandwidth_Bps <= 0.0) throw std::invalid_argument("bad bandwidth");
    double per_block_bytes = static_cast<double>(header_bytes) +
                             (mode == BootstrapMode::Full ? static_cast<double>(payload_bytes) : 0.0);
    return static_cast<double>(height) * (per_block_bytes / bandwidth_Bps + per_block_overhead_s);
}

std::vector<Digest> prune_candidates(const chain::ChainState& view) {
    std::vector<Digest> out;
    uint64_t cutoff = view.finalized_epoch();
    view.for_each_record([&](const chain::NotarizedRecord& rec) {
        if (rec.block.epoch >= cutoff) return;
        if (view.is_finalized(rec.block_hash)) return;
        out.push_back(rec.block.payload_id);
    });
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace wstreamlet::coding
