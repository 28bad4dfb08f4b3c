#include "wstreamlet/chain.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_set>

namespace wstreamlet::chain {

std::array<uint8_t, StateBlock::kEncodedSize> StateBlock::encode() const {
    std::array<uint8_t, kEncodedSize> out;
    uint8_t* p = out.data();
    write_u64_be(p, epoch);
    p += 8;
    std::memcpy(p, parent.bytes.data(), 32);
    p += 32;
    std::memcpy(p, payload_id.bytes.data(), 32);
    p += 32;
    std::memcpy(p, data_commitment.bytes.data(), 32);
    p += 32;
    std::memcpy(p, proposer.bytes.data(), 32);
    p += 32;
    write_u64_be(p, height);
    return out;
}

StateBlock StateBlock::decode(ByteView data) {
    if (data.size() != kEncodedSize) throw std::invalid_argument("bad block encoding size");
    StateBlock b;
    const uint8_t* p = data.data();
    b.epoch = read_u64_be(p);
    p += 8;
    std::memcpy(b.parent.bytes.data(), p, 32);
    p += 32;
    std::memcpy(b.payload_id.bytes.data(), p, 32);
    p += 32;
    std::memcpy(b.data_commitment.bytes.data(), p, 32);
    p += 32;
    std::memcpy(b.proposer.bytes.data(), p, 32);
    p += 32;
    b.height = read_u64_be(p);
    return b;
}

Bytes Vote::encode_payload(uint64_t epoch, const Digest& block_hash, uint8_t csi_tag) {
    Bytes out;
    out.reserve(kPayloadSize);
    append_u64_be(out, epoch);
    out.insert(out.end(), block_hash.bytes.begin(), block_hash.bytes.end());
    out.push_back(csi_tag);
    return out;
}

Bytes Vote::encode() const {
    Bytes out;
    out.reserve(kPayloadSize + 32 + 64);
    Bytes payload = encode_payload(epoch, block_hash, csi_tag);
    out.insert(out.end(), payload.begin(), payload.end());
    out.insert(out.end(), envelope.signer.bytes.begin(), envelope.signer.bytes.end());
    out.insert(out.end(), envelope.signature.begin(), envelope.signature.end());
    return out;
}

std::optional<Vote> Vote::decode(ByteView data) {
    if (data.size() != kPayloadSize + 32 + 64) return std::nullopt;
    Vote v;
    const uint8_t* p = data.data();
    v.epoch = read_u64_be(p);
    p += 8;
    std::memcpy(v.block_hash.bytes.data(), p, 32);
    p += 32;
    v.csi_tag = *p++;
    v.envelope.payload = encode_payload(v.epoch, v.block_hash, v.csi_tag);
    std::memcpy(v.envelope.signer.bytes.data(), p, 32);
    p += 32;
    std::memcpy(v.envelope.signature.data(), p, 64);
    return v;
}

Bytes QuorumCertificate::encode() const {
    Bytes out;
    append_u64_be(out, epoch);
    out.insert(out.end(), block_hash.bytes.begin(), block_hash.bytes.end());
    append_u32_be(out, static_cast<uint32_t>(votes.size()));
    for (const Vote& v : votes) {
        Bytes ve = v.encode();
        out.insert(out.end(), ve.begin(), ve.end());
    }
    return out;
}

std::optional<QuorumCertificate> QuorumCertificate::decode(ByteView data) {
    constexpr size_t vote_size = Vote::kPayloadSize + 32 + 64;
    if (data.size() < 8 + 32 + 4) return std::nullopt;
    QuorumCertificate qc;
    qc.epoch = read_u64_be(data.data());
    std::memcpy(qc.block_hash.bytes.data(), data.data() + 8, 32);
    uint32_t count = read_u32_be(data.data() + 40);
    if (data.size() != 44 + static_cast<size_t>(count) * vote_size) return std::nullopt;
    for (uint32_t i = 0; i < count; ++i) {
        auto v = Vote::decode(data.subspan(44 + i * vote_size, vote_size));
        if (!v) return std::nullopt;
        qc.votes.push_back(std::move(*v));
    }
    return qc;
}

std::optional<QuorumCertificate> is_notarized(const Digest& block_hash, uint64_t epoch,
                                              const std::vector<Vote>& votes, unsigned f,
                                              const VerifyFn& verify) {
    QuorumCertificate qc;
    qc.block_hash = block_hash;
    qc.epoch = epoch;
    std::unordered_set<PublicKeyId, crypto::PublicKeyIdHasher> seen;
    for (const Vote& v : votes) {
        if (v.epoch != epoch || !(v.block_hash == block_hash)) continue;
        Bytes canonical = Vote::encode_payload(v.epoch, v.block_hash, v.csi_tag);
        if (v.envelope.payload != canonical) continue;
        if (!verify(v.envelope.payload, v.envelope.signer, v.envelope.signature)) continue;
        if (!seen.insert(v.envelope.signer).second) continue;  // one vote per signer
        qc.votes.push_back(v);
    }
    if (qc.votes.size() < 2 * static_cast<size_t>(f) + 1) return std::nullopt;
    return qc;
}

// --- ChainState --------------------------------------------------------------

ChainState::ChainState() {
    genesis_ = StateBlock{};  // epoch 0, zero parent, height 0
    genesis_hash_ = genesis_.digest();
    auto rec = std::make_shared<NotarizedRecord>();
    rec->block = genesis_;
    rec->block_hash = genesis_hash_;
    records_.emplace(genesis_hash_, Entry{rec, {}});
    finalized_.emplace(genesis_hash_, true);
    by_epoch_.emplace(0, rec);
    best_height_ = 0;
    best_tips_ = {genesis_hash_};
    finalized_tip_ = genesis_hash_;
}

const NotarizedRecord* ChainState::find(const Digest& h) const {
    auto it = records_.find(h);
    return it == records_.end() ? nullptr : it->second.rec.get();
}

bool ChainState::add_notarized(const NotarizedRecordPtr& rec) {
    const Digest& h = rec->block_hash;
    if (records_.count(h)) return false;
    auto parent_it = records_.find(rec->block.parent);
    if (parent_it == records_.end()) throw std::invalid_argument("notarized block with unknown parent");
    records_.emplace(h, Entry{rec, {}});
    parent_it->second.children.push_back(h);
    by_epoch_.emplace(rec->block.epoch, rec);
    max_known_epoch_ = std::max(max_known_epoch_, rec->block.epoch);
    pending_.push_back(h);
    if (rec->block.height > best_height_) {
        best_height_ = rec->block.height;
        best_tips_.clear();
        best_tips_.push_back(h);
    } else if (rec->block.height == best_height_) {
        best_tips_.push_back(h);
    }
    return true;
}

// Finalizes the path up to `middle` if it is not already final.
void ChainState::maybe_finalize_through(const Digest& middle, std::vector<NotarizedRecordPtr>& out) {
    std::vector<NotarizedRecordPtr> path;
    Digest cur = middle;
    while (!finalized_.count(cur)) {
        auto it = records_.find(cur);
        if (it == records_.end()) return;  // disconnected; cannot happen for valid views
        path.push_back(it->second.rec);
        cur = it->second.rec->block.parent;
    }
    // `cur` is finalized. The new segment attaches to it; newly finalized
    // blocks are recorded oldest first.
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        finalized_.emplace((*it)->block_hash, true);
        out.push_back(*it);
    }
    if (!path.empty()) {
        const auto& tip = path.front();
        if (tip->block.height > finalized_height_) {
            finalized_height_ = tip->block.height;
            finalized_epoch_ = tip->block.epoch;
            finalized_tip_ = tip->block_hash;
        }
    }
}

std::vector<NotarizedRecordPtr> ChainState::update_finality() {
    std::vector<NotarizedRecordPtr> out;
    // A new notarized block B can complete a consecutive-epoch triple as its
    // third, middle, or first element; records can arrive out of order when
    // certificates are imported from peers. Genesis (epoch 0) never counts as
    // a triple member: a cold start needs three successful epochs, not two.
    for (const Digest& h : pending_) {
        auto it = records_.find(h);
        const NotarizedRecord& rec = *it->second.rec;
        uint64_t e = rec.block.epoch;
        // as third: parent at e-1, grandparent at e-2 -> finalize through parent
        if (e >= 3) {
            auto pit = records_.find(rec.block.parent);
            if (pit != records_.end() && pit->second.rec->block.epoch == e - 1) {
                auto git = records_.find(pit->second.rec->block.parent);
                if (git != records_.end() && git->second.rec->block.epoch == e - 2)
                    maybe_finalize_through(rec.block.parent, out);
            }
        }
        // as middle: parent at e-1 and some child at e+1
        if (e >= 2) {
            auto pit = records_.find(rec.block.parent);
            bool parent_ok = pit != records_.end() && (pit->second.rec->block.epoch == e - 1);
            if (parent_ok) {
                for (const Digest& ch : it->second.children) {
                    auto cit = records_.find(ch);
                    if (cit != records_.end() && cit->second.rec->block.epoch == e + 1) {
                        maybe_finalize_through(h, out);
                        break;
                    }
                }
            }
        }
        // as first: child at e+1 with its own child at e+2
        for (const Digest& ch : it->second.children) {
            auto cit = records_.find(ch);
            if (cit == records_.end() || cit->second.rec->block.epoch != e + 1) continue;
            for (const Digest& gch : cit->second.children) {
                auto git = records_.find(gch);
                if (git != records_.end() && git->second.rec->block.epoch == e + 2) {
                    maybe_finalize_through(ch, out);
                    break;
                }
            }
        }
    }
    pending_.clear();
    return out;
}

Digest ChainState::longest_tip_hash() const {
    Digest tip = best_tips_.front();
    for (const Digest& t : best_tips_)
        if (t < tip) tip = t;
    return tip;
}

std::vector<const StateBlock*> ChainState::longest_notarized_chain() const {
    std::vector<const StateBlock*> path;
    Digest cur = longest_tip_hash();
    for (;;) {
        auto it = records_.find(cur);
        path.push_back(&it->second.rec->block);
        if (cur == genesis_hash_) break;
        cur = it->second.rec->block.parent;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

bool ChainState::is_longest_tip(const Digest& h) const {
    for (const Digest& t : best_tips_)
        if (t == h) return true;
    return false;
}

NotarizedRecordPtr ChainState::record_for_epoch(uint64_t e) const {
    auto it = by_epoch_.find(e);
    return it == by_epoch_.end() ? nullptr : it->second;
}

void ChainState::for_each_record(const std::function<void(const NotarizedRecord&)>& fn) const {
    for (const auto& [h, entry] : records_) {
        if (h == genesis_hash_) continue;
        fn(*entry.rec);
    }
}

bool voting_eligibility(const ChainState& view, const StateBlock& proposal,
                        const PublicKeyId& expected_leader, uint64_t current_epoch) {
    if (proposal.epoch != current_epoch) return false;
    if (!(proposal.proposer == expected_leader)) return false;
    const NotarizedRecord* parent = view.find(proposal.parent);
    if (parent == nullptr) return false;
    if (!view.is_longest_tip(proposal.parent)) return false;
    if (proposal.height != parent->block.height + 1) return false;
    if (proposal.epoch <= parent->block.epoch) return false;
    return true;
}

}  // namespace wstreamlet::chain
