#include "wstreamlet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wstreamlet::channel {

namespace {

void check_prob(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0,1]");
}

}  // namespace

LinkMatrix::LinkMatrix(size_t n, double p) : n_(n), p_(n * n, p), classes_(n, NodeClass::Good) {
    if (n == 0) throw std::invalid_argument("empty cluster");
    check_prob(p);
    for (size_t i = 0; i < n; ++i) p_[i * n + i] = 1.0;  // self-delivery is trivial
}

LinkMatrix::LinkMatrix(size_t n, std::vector<NodeClass> classes, double p_good, double p_fade)
    : n_(n), p_(n * n, 0.0), classes_(std::move(classes)) {
    if (n == 0 || classes_.size() != n) throw std::invalid_argument("class vector size mismatch");
    check_prob(p_good);
    check_prob(p_fade);
    for (size_t i = 0; i < n; ++i) {
        double out = classes_[i] == NodeClass::DeepFade ? p_fade : p_good;
        for (size_t j = 0; j < n; ++j) p_[i * n + j] = (i == j) ? 1.0 : out;
    }
}

void LinkMatrix::set_p(size_t sender, size_t receiver, double p) {
    check_prob(p);
    p_[sender * n_ + receiver] = p;
}

double LinkMatrix::mean_gamma(size_t sender) const {
    return classes_[sender] == NodeClass::DeepFade ? kGammaMeanFade : kGammaMeanGood;
}

bool attempt_delivery(const LinkMatrix& link, size_t sender, size_t receiver, RngStream& rng) {
    return rng.next_bernoulli(link.p(sender, receiver));
}

double within_slot_delivery(double p_attempt, unsigned k_tx) {
    check_prob(p_attempt);
    if (k_tx == 0) throw std::invalid_argument("k_tx must be positive");
    return 1.0 - std::pow(1.0 - p_attempt, static_cast<double>(k_tx));
}

double sample_csi(const LinkMatrix& link, size_t sender, size_t receiver, RngStream& rng) {
    if (sender == receiver) throw std::invalid_argument("csi sample needs distinct endpoints");
    return rng.next_exponential(link.mean_gamma(sender));
}

LinkMatrix make_two_class_topology(size_t n, double beta, double p_good, double p_fade, RngStream& rng) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta outside [0,1]");
    size_t n_fade = static_cast<size_t>(std::llround(beta * static_cast<double>(n)));
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    // Partial Fisher-Yates: the first n_fade slots pick the fading set.
    for (size_t i = 0; i < n_fade; ++i) {
        size_t j = i + static_cast<size_t>(rng.next_below(n - i));
        std::swap(order[i], order[j]);
    }
    std::vector<NodeClass> classes(n, NodeClass::Good);
    for (size_t i = 0; i < n_fade; ++i) classes[order[i]] = NodeClass::DeepFade;
    return LinkMatrix(n, std::move(classes), p_good, p_fade);
}

uint8_t quantize_csi(double gamma) {
    if (!(gamma > 0.0)) return 0;
    // nudge absorbs log2/exp2 rounding so lower cell edges land in their own
    // cell and dequantized tags survive a round trip; 1e-9 sits far above
    // the arithmetic error and far below the cell width of 1
    double code = std::log2(1.0 + gamma) / kCsiTagStep + 1e-9;
    if (code >= kCsiTagMax) return kCsiTagMax;
    return static_cast<uint8_t>(code);
}

double dequantize_csi(uint8_t tag) { return std::exp2(tag * kCsiTagStep) - 1.0; }

}  // namespace wstreamlet::channel
