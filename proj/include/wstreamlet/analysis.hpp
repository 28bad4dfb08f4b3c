#pragma once

#include <cstdint>
#include <vector>

namespace wstreamlet::analysis {

// Parameters of the homogeneous-cluster liveness model: n nodes, at most f
// Byzantine, honest-to-honest per-attempt delivery at least p_h, k_tx
// attempts per slot, and an honest leader with probability at least pi.
struct LivenessParams {
    unsigned n = 10;
    unsigned f = 3;
    double p_h = 0.95;
    unsigned k_tx = 2;
    double pi = 1.0;
};

// Within-slot delivery floor: 1 - (1 - p_h)^k_tx.
double p_hat(double p_h, unsigned k_tx);

// P[Binomial(n, p) >= k], evaluated stably.
double binomial_tail_geq(unsigned n, unsigned k, double p);

// Probability that at least 2f+1 of the h = n - f honest nodes receive an
// honest leader's proposal within its slot.
double proposal_reach_probability(const LivenessParams& lp);

// psi(x): probability the leader collects at least 2f+1 of x cast votes.
double vote_return_probability(unsigned x, const LivenessParams& lp);

// Lower bound on the per-epoch notarization probability:
// q >= pi * sum_x P[X = x] * psi(x) over x in [2f+1, h].
double q_lower_bound(const LivenessParams& lp);

// Expected epochs from a cold start until the first finalization, for a
// per-epoch success probability q: (1 - q^3) / (q^3 (1 - q)), with the
// closed form's limit of exactly 3 at q = 1. Requires q in (0, 1].
double expected_epochs_to_finality(double q);

// Epoch duration in milliseconds: (n + 1) slots plus a guard interval.
double epoch_duration_ms(unsigned n, double t_slot_ms, double t_guard_ms);

// Expected wall-clock time to finality: T_epoch * E[epochs].
double expected_time_to_finality_ms(double q, unsigned n, double t_slot_ms, double t_guard_ms);

// Airtime cost proxy of reaching finality: (n+1) * k_tx * E[epochs] slots of
// transmission opportunity, minimized over k_tx.
struct KtxCurvePoint {
    unsigned k_tx;
    double q;
    double expected_epochs;
    double cost;
};

struct KtxOptimum {
    unsigned best_k_tx;
    double best_cost;
    std::vector<KtxCurvePoint> curve;
};

// Brute force over k_tx in [k_min, k_max]. Points whose q is zero get an
// infinite cost.
KtxOptimum optimize_k_tx(const LivenessParams& lp, unsigned k_min, unsigned k_max);

}  // namespace wstreamlet::analysis
