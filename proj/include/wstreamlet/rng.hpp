#pragma once

#include <cmath>
#include <cstdint>

namespace wstreamlet {

// Deterministic counter-style PRNG (splitmix64 core).
//
// Every random decision in the simulator is drawn from a stream derived from
// the run seed by a chain of derive() calls keyed on structural coordinates
// (epoch, slot, receiver, ...). Two properties matter:
//   - bit-identical sequences for identical seeds on every platform (the
//     standard <random> distributions do not guarantee this), and
//   - common-random-number comparisons: a config change that consumes fewer
//     draws in one substream never perturbs any other substream, so e.g.
//     raising the per-slot retransmit budget only extends each link's
//     attempt sequence instead of realigning the whole run.
class RngStream {
  public:
    explicit RngStream(uint64_t seed) : base_(mix(seed ^ 0x57524e47u)) {}

    // Child stream for a structural coordinate; independent of draws taken
    // from this stream so far.
    RngStream derive(uint64_t tag) const { return RngStream(mix(base_ ^ mix(tag + 0x6a09e667f3bcc909ull)), 0); }
    RngStream derive(uint64_t a, uint64_t b) const { return derive(a).derive(b); }
    RngStream derive(uint64_t a, uint64_t b, uint64_t c) const { return derive(a).derive(b).derive(c); }

    uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ull;
        return mix(base_ + counter_);
    }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool next_bernoulli(double p) { return next_unit() < p; }

    // Unbiased uniform integer in [0, n).
    uint64_t next_below(uint64_t n) {
        if (n == 0) return 0;
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Exponential with the given mean; uses one draw.
    double next_exponential(double mean) { return -mean * std::log1p(-next_unit()); }

  private:
    RngStream(uint64_t raw_base, int) : base_(raw_base) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t base_;
    uint64_t counter_ = 0;
};

}  // namespace wstreamlet
