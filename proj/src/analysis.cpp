#include "wstreamlet/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wstreamlet::analysis {

namespace {

void check_params(const LivenessParams& lp) {
    if (lp.n == 0 || lp.n <= lp.f) throw std::invalid_argument("need n > f >= 0");
    if (!(lp.p_h >= 0.0 && lp.p_h <= 1.0)) throw std::invalid_argument("p_h outside [0,1]");
    if (!(lp.pi >= 0.0 && lp.pi <= 1.0)) throw std::invalid_argument("pi outside [0,1]");
    if (lp.k_tx == 0) throw std::invalid_argument("k_tx must be positive");
    if (lp.n < 2 * lp.f + 1) throw std::invalid_argument("quorum exceeds cluster size");
}

double log_choose(unsigned n, unsigned k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

double p_hat(double p_h, unsigned k_tx) {
    if (k_tx == 0) throw std::invalid_argument("k_tx must be positive");
    return 1.0 - std::pow(1.0 - p_h, static_cast<double>(k_tx));
}

double binomial_tail_geq(unsigned n, unsigned k, double p) {
    if (k == 0) return 1.0;
    if (k > n) return 0.0;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double sum = 0.0;
    for (unsigned x = k; x <= n; ++x)
        sum += std::exp(log_choose(n, x) + x * std::log(p) + (n - x) * std::log1p(-p));
    return std::min(sum, 1.0);
}

double proposal_reach_probability(const LivenessParams& lp) {
    check_params(lp);
    unsigned h = lp.n - lp.f;
    return binomial_tail_geq(h, 2 * lp.f + 1, p_hat(lp.p_h, lp.k_tx));
}

double vote_return_probability(unsigned x, const LivenessParams& lp) {
    check_params(lp);
    return binomial_tail_geq(x, 2 * lp.f + 1, p_hat(lp.p_h, lp.k_tx));
}

double q_lower_bound(const LivenessParams& lp) {
    check_params(lp);
    unsigned h = lp.n - lp.f;
    unsigned quorum = 2 * lp.f + 1;
    if (quorum > h) return 0.0;
    double ph = p_hat(lp.p_h, lp.k_tx);
    if (ph <= 0.0) return 0.0;
    double sum = 0.0;
    for (unsigned x = quorum; x <= h; ++x) {
        double px = (ph >= 1.0)
                        ? (x == h ? 1.0 : 0.0)
                        : std::exp(log_choose(h, x) + x * std::log(ph) + (h - x) * std::log1p(-ph));
        sum += px * binomial_tail_geq(x, quorum, ph);
    }
    return lp.pi * std::min(sum, 1.0);
}

double expected_epochs_to_finality(double q) {
    if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("q must be in (0,1]");
    if (q == 1.0) return 3.0;
    double q3 = q * q * q;
    return (1.0 - q3) / (q3 * (1.0 - q));
}

double epoch_duration_ms(unsigned n, double t_slot_ms, double t_guard_ms) {
    return (static_cast<double>(n) + 1.0) * t_slot_ms + t_guard_ms;
}

double expected_time_to_finality_ms(double q, unsigned n, double t_slot_ms, double t_guard_ms) {
    return epoch_duration_ms(n, t_slot_ms, t_guard_ms) * expected_epochs_to_finality(q);
}

KtxOptimum optimize_k_tx(const LivenessParams& lp, unsigned k_min, unsigned k_max) {
    if (k_min == 0 || k_min > k_max) throw std::invalid_argument("bad k_tx range");
    KtxOptimum opt;
    opt.best_k_tx = 0;
    opt.best_cost = std::numeric_limits<double>::infinity();
    for (unsigned k = k_min; k <= k_max; ++k) {
        LivenessParams p = lp;
        p.k_tx = k;
        KtxCurvePoint pt;
        pt.k_tx = k;
        pt.q = q_lower_bound(p);
        if (pt.q > 0.0) {
            pt.expected_epochs = expected_epochs_to_finality(pt.q);
            pt.cost = static_cast<double>(lp.n + 1) * k * pt.expected_epochs;
        } else {
            pt.expected_epochs = std::numeric_limits<double>::infinity();
            pt.cost = std::numeric_limits<double>::infinity();
        }
        if (pt.cost < opt.best_cost) {
            opt.best_cost = pt.cost;
            opt.best_k_tx = k;
        }
        opt.curve.push_back(pt);
    }
    return opt;
}

}  // namespace wstreamlet::analysis
