#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "wstreamlet/cale.hpp"
#include "wstreamlet/chain.hpp"
#include "wstreamlet/channel.hpp"
#include "wstreamlet/crypto.hpp"
#include "wstreamlet/rng.hpp"
#include "wstreamlet/tdma.hpp"

namespace wstreamlet::consensus {

using crypto::Digest;
using crypto::PublicKeyId;

enum class LeaderPolicy : uint8_t {
    Cale,    // weighted seeded lottery from finalized connectivity scores
    Random,  // uniform: the lottery with all weights forced to 1
    Oracle,  // fixed best-connected honest node (reads the link matrix)
    Static,  // fixed node index, for controlled tests
};

// Precomputed lottery values u(epoch, node) shared across runs and policies;
// the keys depend only on the cluster size, so one table serves a whole sweep.
class ElectionCache {
  public:
    ElectionCache(const std::vector<PublicKeyId>& pks, uint64_t max_epoch);
    double u(uint64_t epoch, size_t node) const { return table_[epoch * n_ + node]; }
    uint64_t max_epoch() const { return max_epoch_; }
    size_t n() const { return n_; }

  private:
    size_t n_;
    uint64_t max_epoch_;
    std::vector<double> table_;
};

struct EngineConfig {
    uint32_t n = 10;
    uint32_t f = 3;
    uint32_t k_tx = 2;
    tdma::FrameTiming timing;
    LeaderPolicy policy = LeaderPolicy::Cale;
    double alpha = cale::kDefaultAlpha;
    double omega_min = cale::kDefaultOmegaMin;
    uint32_t static_leader = 0;
    // Election basis window: weights for epochs in window t (of this many
    // epochs) derive from records whose finality evidence completed by the
    // end of window t-2. The slack lets every honest node learn the basis
    // before it is used, keeping elections unanimous.
    uint64_t weight_window = 16;
    // When false, quorum assembly trusts votes this engine itself signed
    // instead of re-verifying them (outcome-identical, measurably faster).
    bool full_verify = true;
    bool collect_traces = false;
    bool collect_vote_log = false;
};

struct FinalityEvent {
    uint64_t epoch = 0;
    double wall_time_ms = 0.0;
};

struct RunMetrics {
    uint64_t epochs_run = 0;
    uint64_t notarized_count = 0;
    std::vector<uint8_t> flags;  // per-epoch leader-side quorum indicator
    std::vector<FinalityEvent> finality_events;  // canonical-view advances
    std::vector<uint64_t> finality_segments;     // epochs per completed run of 3
    uint64_t honest_leader_epochs = 0;
    uint64_t honest_double_votes = 0;
    uint64_t leader_disagreements = 0;  // epochs honest views elected differently
    uint64_t on_air_attempts = 0;
    bool safety_violation = false;  // conflicting finalized blocks were seen

    double notarization_rate() const {
        return epochs_run ? static_cast<double>(notarized_count) / epochs_run : 0.0;
    }
    double honest_leader_fraction() const {
        return epochs_run ? static_cast<double>(honest_leader_epochs) / epochs_run : 0.0;
    }
    // Epochs from a fresh start to a completed run of three consecutive
    // successes, averaged over completed segments.
    double mean_finality_epochs() const;
    double mean_finality_latency_ms(const tdma::FrameTiming& t, uint32_t n) const;
    double percentile_finality_epochs(double p) const;  // nearest-rank, p in [0,1]
};

struct VoteLogEntry {
    uint64_t epoch;
    uint32_t signer;
    Digest block_hash;
};

struct NodeRuntime {
    uint32_t index = 0;
    PublicKeyId pk;
    tdma::FaultMode fault = tdma::FaultMode::Honest;
    chain::ChainState view;
    cale::WeightTable table;
    std::vector<double> weight_pow;  // w_i^alpha cached for the lottery

    struct ScoreEvent {
        uint64_t fin_epoch;  // epoch whose block completed the finality proof
        uint32_t proposer;
        double score;
    };
    std::vector<ScoreEvent> score_events;
    size_t scores_applied = 0;
    uint64_t table_window = ~0ull;
};

// One simulated cluster: per-node chain views, the TDMA epoch loop, leader
// election, fault injection, and liveness/finality metrics. Nodes exchange
// messages only through the lossy slot schedule; certificates reached by one
// view spread to others through the ancestry attached to later proposals.
class ConsensusEngine {
  public:
    ConsensusEngine(const EngineConfig& cfg, channel::LinkMatrix link, tdma::FaultPlan faults,
                    RngStream rng, const ElectionCache* cache = nullptr);

    // Runs `epochs` more epochs; metrics accumulate across calls.
    const RunMetrics& run(uint64_t epochs);

    // Runs exactly one epoch and returns its trace.
    tdma::EpochTrace step();

    const RunMetrics& metrics() const { return metrics_; }
    const std::vector<NodeRuntime>& nodes() const { return nodes_; }
    const chain::ChainState& observer() const { return observer_; }
    const std::vector<PublicKeyId>& public_keys() const { return pks_; }
    const std::vector<tdma::EpochTrace>& traces() const { return traces_; }
    const std::vector<VoteLogEntry>& vote_log() const { return vote_log_; }
    const crypto::KeyedHashScheme& scheme() const { return scheme_; }
    uint64_t current_epoch() const { return epoch_; }
    uint32_t leader_for_tests(uint64_t epoch, uint32_t node) {
        return elect(epoch, nodes_[node]);
    }

  private:
    struct ProposalVariant {
        chain::StateBlock block;
        Digest block_hash;
        chain::NotarizedRecordPtr parent_rec;  // null when the parent is genesis
    };
    struct PendingVote {
        chain::Vote vote;
        bool trusted = false;  // signed by this engine in this run
    };
    struct HeardRef {
        uint32_t voter;
        uint8_t variant;
    };
    struct Tally {
        Digest hash;
        uint64_t mask = 0;
        uint32_t count = 0;
    };

    void run_one(tdma::EpochTrace& trace);
    uint32_t elect(uint64_t epoch, NodeRuntime& node);
    void refresh_table(NodeRuntime& node, uint64_t window);
    double lottery_u(uint64_t epoch, size_t node) const;
    void import_ancestry(NodeRuntime& node, const chain::NotarizedRecordPtr& rec);
    void absorb_record(NodeRuntime& node, const chain::NotarizedRecordPtr& rec);
    void absorb_observer(const chain::NotarizedRecordPtr& rec);
    void tally_vote(uint32_t receiver, uint32_t voter, uint8_t variant);
    chain::NotarizedRecordPtr assemble_record(const ProposalVariant& prop, uint32_t assembler,
                                              const Tally& tally);
    static Digest synthetic_digest(uint64_t a, uint64_t b, uint64_t c);

    EngineConfig cfg_;
    channel::LinkMatrix link_;
    tdma::FaultPlan faults_;
    RngStream rng_;
    const ElectionCache* cache_ = nullptr;

    crypto::KeyedHashScheme scheme_;
    std::vector<PublicKeyId> pks_;
    std::vector<crypto::SecretKey> secrets_;
    std::vector<uint32_t> slot_order_;  // slot s-1 -> node index, by pk order
    std::unordered_map<PublicKeyId, uint32_t, crypto::PublicKeyIdHasher> node_of_pk_;

    std::vector<NodeRuntime> nodes_;
    chain::ChainState observer_;
    std::unordered_map<Digest, chain::NotarizedRecordPtr, crypto::DigestHasher> pool_;
    std::unordered_map<uint64_t, Digest> finalized_height_hash_;
    uint32_t oracle_leader_ = 0;

    uint64_t epoch_ = 0;
    uint64_t success_streak_ = 0;
    uint64_t segment_start_epoch_ = 0;

    RunMetrics metrics_;
    std::vector<tdma::EpochTrace> traces_;
    std::vector<VoteLogEntry> vote_log_;

    // per-epoch scratch, reused across epochs
    tdma::EpochTrace scratch_;
    std::vector<uint32_t> leader_view_;
    std::vector<std::optional<ProposalVariant>> decoded_;
    std::vector<std::vector<PendingVote>> outbox_;
    std::vector<std::vector<Tally>> tallies_;
    std::vector<std::vector<HeardRef>> heard_;
};

// Best-connected honest baseline: the honest node maximizing its minimum
// per-attempt outgoing delivery probability to other honest nodes. Ties go
// to the smaller public key.
uint32_t oracle_leader(const channel::LinkMatrix& link, const tdma::FaultPlan& faults,
                       const std::vector<PublicKeyId>& pks);

}  // namespace wstreamlet::consensus
