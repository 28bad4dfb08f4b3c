#pragma once

#include <cstdint>
#include <vector>

#include "wstreamlet/chain.hpp"

namespace wstreamlet::cale {

using chain::QuorumCertificate;
using crypto::PublicKeyId;

constexpr double kDefaultAlpha = 1.0;
constexpr double kDefaultOmegaMin = 0.01;

// Lower median over the certificate's votes of log2(1 + gamma), gamma taken
// from each vote's dequantized CSI tag. With at least 2f+1 votes of which at
// most f carry adversarial tags, the result stays inside the honest range.
double connectivity_score(const QuorumCertificate& qc);

// Lower median of a value list: element at index (m-1)/2 of the sorted list.
double lower_median(std::vector<double> values);

// Per-node election weights derived from the latest finalized checkpoint.
// omega_fin[i] is the connectivity score of the most recent finalized block
// proposed by node i, 1.0 until a node has one. Weights are floored scores
// normalized by the mean raw score.
struct WeightTable {
    std::vector<double> omega_fin;  // by node index
    std::vector<double> weights;    // by node index
    double alpha = kDefaultAlpha;
    double omega_min = kDefaultOmegaMin;
    uint64_t basis_epoch = 0;  // finalized epoch the table was derived from

    static WeightTable uniform(size_t n, double alpha = kDefaultAlpha,
                               double omega_min = kDefaultOmegaMin);
};

// Recomputes weights from scores: w_i = max(omega_i, omega_min) / mean(omega).
void update_weights(WeightTable& table);

// Seeded lottery: node argmin of -ln(hash_nor(epoch, pk_i)) / w_i^alpha.
// Every honest node evaluates the same expression, so agreement follows from
// a shared table. Selection law: Pr[winner = i] = w_i^alpha / sum_k w_k^alpha.
// Ties (never observed at double precision) break toward the smaller pk.
size_t elect_leader(uint64_t epoch, const WeightTable& table, const std::vector<PublicKeyId>& pks);

// Probability the elected leader is honest under the table's weights.
double honest_leader_probability(const WeightTable& table, const std::vector<bool>& honest);

}  // namespace wstreamlet::cale
