#include "wstreamlet/tdma.hpp"

namespace wstreamlet::tdma {

uint32_t FaultPlan::count(FaultMode m) const {
    uint32_t c = 0;
    for (FaultMode x : modes)
        if (x == m) ++c;
    return c;
}

uint32_t FaultPlan::count_not(FaultMode m) const {
    return static_cast<uint32_t>(modes.size()) - count(m);
}

std::optional<uint32_t> first_delivery(const channel::LinkMatrix& link, uint32_t sender,
                                       uint32_t receiver, uint32_t k_tx, RngStream slot_rng) {
    double p = link.p(sender, receiver);
    for (uint32_t a = 0; a < k_tx; ++a)
        if (slot_rng.next_bernoulli(p)) return a;
    return std::nullopt;
}

}  // namespace wstreamlet::tdma
