#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "wstreamlet/crypto.hpp"

namespace wstreamlet::chain {

using crypto::Digest;
using crypto::PublicKeyId;
using crypto::SignedEnvelope;

// Consensus-plane block header. Payload bytes live in the storage plane; the
// header carries only their identifier and commitment.
struct StateBlock {
    uint64_t epoch = 0;
    Digest parent;
    Digest payload_id;
    Digest data_commitment;
    PublicKeyId proposer;
    uint64_t height = 0;

    static constexpr size_t kEncodedSize = 8 + 32 + 32 + 32 + 32 + 8;

    std::array<uint8_t, kEncodedSize> encode() const;
    static StateBlock decode(ByteView data);
    Digest digest() const { return crypto::hash(encode()); }

    bool operator==(const StateBlock&) const = default;
};

// Vote for (epoch, block_hash) carrying the voter's quantized CSI tag for the
// leader's proposal transmission. The envelope payload is the canonical vote
// encoding; anything else fails verification.
struct Vote {
    uint64_t epoch = 0;
    Digest block_hash;
    uint8_t csi_tag = 0;
    SignedEnvelope envelope;

    static constexpr size_t kPayloadSize = 8 + 32 + 1;
    static Bytes encode_payload(uint64_t epoch, const Digest& block_hash, uint8_t csi_tag);
    Bytes encode() const;
    static std::optional<Vote> decode(ByteView data);
};

struct QuorumCertificate {
    Digest block_hash;
    uint64_t epoch = 0;
    std::vector<Vote> votes;  // distinct signers, all for (epoch, block_hash)

    Bytes encode() const;
    static std::optional<QuorumCertificate> decode(ByteView data);
};

using VerifyFn = std::function<bool(ByteView payload, const PublicKeyId&, const crypto::Signature&)>;

// Checks a vote set against a block: >= 2f+1 valid votes from distinct
// signers, each well-formed and for exactly (epoch, block_hash). Malformed
// or mismatched votes are excluded, duplicates counted once.
std::optional<QuorumCertificate> is_notarized(const Digest& block_hash, uint64_t epoch,
                                              const std::vector<Vote>& votes, unsigned f,
                                              const VerifyFn& verify);

// A notarized block together with its certificate; shared between node views
// so each certificate is stored once per run.
struct NotarizedRecord {
    StateBlock block;
    QuorumCertificate qc;
    Digest block_hash;
};
using NotarizedRecordPtr = std::shared_ptr<const NotarizedRecord>;

// One node's view of the block tree: notarized blocks keyed by digest plus
// the finalized prefix. The genesis block (epoch 0, height 0, zero parent)
// is notarized by definition and is the initial finalized tip.
class ChainState {
  public:
    ChainState();

    const StateBlock& genesis() const { return genesis_; }
    const Digest& genesis_hash() const { return genesis_hash_; }

    bool has_block(const Digest& h) const { return records_.count(h) != 0; }
    const NotarizedRecord* find(const Digest& h) const;

    // Inserts a notarized block (with certificate). The parent must already
    // be notarized in this view. Returns false if already present.
    bool add_notarized(const NotarizedRecordPtr& rec);

    // Applies the finality rule: three blocks on one path with consecutive
    // epochs finalize the chain up to and including the middle block.
    // Returns the newly finalized records, oldest first. Idempotent.
    std::vector<NotarizedRecordPtr> update_finality();

    // The longest notarized chain, genesis first. Ties by smaller tip digest.
    std::vector<const StateBlock*> longest_notarized_chain() const;

    // Digest of the tip longest_notarized_chain() would end at.
    Digest longest_tip_hash() const;

    bool is_longest_tip(const Digest& h) const;
    uint64_t max_notarized_height() const { return best_height_; }

    const Digest& finalized_tip() const { return finalized_tip_; }
    uint64_t finalized_height() const { return finalized_height_; }
    uint64_t finalized_epoch() const { return finalized_epoch_; }
    bool is_finalized(const Digest& h) const { return finalized_.count(h) != 0; }

    // Notarized record for an epoch, if this view knows one. For epochs with
    // more than one notarized block (possible only above the n = 3f+1
    // minimum), an arbitrary one is returned.
    NotarizedRecordPtr record_for_epoch(uint64_t e) const;
    uint64_t max_known_epoch() const { return max_known_epoch_; }

    size_t notarized_count() const { return records_.size(); }

    // Visits every notarized record in this view, genesis excluded.
    void for_each_record(const std::function<void(const NotarizedRecord&)>& fn) const;

  private:
    struct Entry {
        NotarizedRecordPtr rec;
        std::vector<Digest> children;
    };

    void maybe_finalize_through(const Digest& middle, std::vector<NotarizedRecordPtr>& out);

    StateBlock genesis_;
    Digest genesis_hash_;
    std::unordered_map<Digest, Entry, crypto::DigestHasher> records_;
    std::unordered_map<Digest, bool, crypto::DigestHasher> finalized_;
    std::unordered_map<uint64_t, NotarizedRecordPtr> by_epoch_;
    std::vector<Digest> pending_;  // notarized since the last finality pass
    uint64_t best_height_ = 0;
    std::vector<Digest> best_tips_;
    Digest finalized_tip_;
    uint64_t finalized_height_ = 0;
    uint64_t finalized_epoch_ = 0;
    uint64_t max_known_epoch_ = 0;
};

// Honest voting rule: vote for a proposal iff it comes from the expected
// leader of the current epoch, extends a tip of one of this view's longest
// notarized chains, and is well-formed (height/epoch advance its parent).
bool voting_eligibility(const ChainState& view, const StateBlock& proposal,
                        const PublicKeyId& expected_leader, uint64_t current_epoch);

}  // namespace wstreamlet::chain
