#include "wstreamlet/cale.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wstreamlet/channel.hpp"

namespace wstreamlet::cale {

double lower_median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty list");
    size_t k = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + k, values.end());
    return values[k];
}

double connectivity_score(const QuorumCertificate& qc) {
    if (qc.votes.empty()) throw std::invalid_argument("connectivity score of empty certificate");
    std::vector<double> v;
    v.reserve(qc.votes.size());
    for (const auto& vote : qc.votes)
        v.push_back(std::log2(1.0 + channel::dequantize_csi(vote.csi_tag)));
    return lower_median(std::move(v));
}

WeightTable WeightTable::uniform(size_t n, double alpha, double omega_min) {
    WeightTable t;
    t.omega_fin.assign(n, 1.0);
    t.weights.assign(n, 1.0);
    t.alpha = alpha;
    t.omega_min = omega_min;
    return t;
}

void update_weights(WeightTable& table) {
    if (table.omega_fin.empty()) throw std::invalid_argument("empty weight table");
    double mean = 0.0;
    for (double o : table.omega_fin) mean += o;
    mean /= static_cast<double>(table.omega_fin.size());
    if (!(mean > 0.0)) throw std::invalid_argument("non-positive mean connectivity score");
    table.weights.resize(table.omega_fin.size());
    for (size_t i = 0; i < table.omega_fin.size(); ++i)
        table.weights[i] = std::max(table.omega_fin[i], table.omega_min) / mean;
}

size_t elect_leader(uint64_t epoch, const WeightTable& table, const std::vector<PublicKeyId>& pks) {
    if (pks.empty() || pks.size() != table.weights.size())
        throw std::invalid_argument("weight/pk size mismatch");
    size_t best = 0;
    double best_rho = 0.0;
    bool have = false;
    for (size_t i = 0; i < pks.size(); ++i) {
        double u = crypto::hash_nor(epoch, pks[i]);
        double w = std::pow(table.weights[i], table.alpha);
        if (!(w > 0.0)) throw std::invalid_argument("non-positive election weight");
        double rho = -std::log(u) / w;
        if (!have || rho < best_rho || (rho == best_rho && pks[i] < pks[best])) {
            best = i;
            best_rho = rho;
            have = true;
        }
    }
    return best;
}

double honest_leader_probability(const WeightTable& table, const std::vector<bool>& honest) {
    if (honest.size() != table.weights.size()) throw std::invalid_argument("honest mask size mismatch");
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < table.weights.size(); ++i) {
        double wa = std::pow(table.weights[i], table.alpha);
        den += wa;
        if (honest[i]) num += wa;
    }
    return num / den;
}

}  // namespace wstreamlet::cale
