#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wstreamlet/channel.hpp"
#include "wstreamlet/rng.hpp"

namespace wstreamlet::tdma {

// Fixed per-epoch frame: slot 0 carries the leader's proposal, slots 1..n
// carry one vote each, then a guard interval absorbs processing and
// turnaround. Every epoch takes the same wall time regardless of outcome.
struct FrameTiming {
    double t_slot_ms = 10.0;
    double t_guard_ms = 5.0;

    double epoch_duration_ms(uint32_t n) const {
        return (n + 1) * t_slot_ms + t_guard_ms;
    }
};

enum class FaultMode : uint8_t {
    Honest,
    SilentLeader,   // transmits nothing when leading, votes normally
    SilentVoter,    // proposes honestly when leading, never votes
    CsiMisreport,   // always reports the maximum channel tag in its votes
    Equivocate,     // leader: alternates two conflicting proposals across
                    // repeats; voter: casts a second vote for a fabricated
                    // block hash alongside the real one
};

struct FaultPlan {
    std::vector<FaultMode> modes;

    static FaultPlan honest(uint32_t n) { return FaultPlan{std::vector<FaultMode>(n, FaultMode::Honest)}; }

    FaultMode mode(uint32_t i) const { return i < modes.size() ? modes[i] : FaultMode::Honest; }
    uint32_t count_not(FaultMode m) const;
    uint32_t count(FaultMode m) const;
};

// What one epoch did on the air. Node sets are bitmasks by node index
// (cluster sizes stay well under 64). votes_heard[r] has bit v set when
// receiver r decoded a vote from node v in v's slot.
struct EpochTrace {
    uint64_t epoch = 0;
    uint32_t leader = 0;
    uint64_t proposal_receivers = 0;
    std::vector<uint64_t> votes_heard;
    uint64_t on_air_attempts = 0;
    bool notarized = false;  // leader assembled a quorum this epoch
    double wall_time_ms = 0.0;
};

// One slot, one receiver: the sender repeats the frame k_tx times and the
// receiver decodes the first repeat that survives the channel. Returns the
// 0-based index of that repeat, or nullopt if all were lost. Attempts are
// drawn in order from slot_rng, so raising k_tx never changes the fate of
// the earlier repeats (common random numbers across configurations).
std::optional<uint32_t> first_delivery(const channel::LinkMatrix& link, uint32_t sender,
                                       uint32_t receiver, uint32_t k_tx, RngStream slot_rng);

// Scheduled airtime of one epoch, in frame transmissions. The grid runs
// open loop with no acknowledgements: all n+1 slots are repeated k_tx
// times whether or not the transmitter has anything to send.
inline uint64_t scheduled_attempts(uint32_t n, uint32_t k_tx) {
    return static_cast<uint64_t>(n + 1) * k_tx;
}

}  // namespace wstreamlet::tdma
