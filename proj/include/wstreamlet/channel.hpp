#pragma once

#include <cstdint>
#include <vector>

#include "wstreamlet/rng.hpp"

namespace wstreamlet::channel {

// Node channel class. Labels drive both the per-attempt delivery probability
// of a node's outgoing links and the SNR distribution receivers observe for
// its transmissions; the two are sampled independently.
enum class NodeClass : uint8_t { Good = 0, DeepFade = 1 };

// Directed per-attempt delivery probabilities for a single-hop cluster.
// p(i, j) is the probability one transmission attempt from i reaches j.
class LinkMatrix {
  public:
    LinkMatrix(size_t n, double p);  // homogeneous; all classes Good
    LinkMatrix(size_t n, std::vector<NodeClass> classes, double p_good, double p_fade);

    size_t size() const { return n_; }
    double p(size_t sender, size_t receiver) const { return p_[sender * n_ + receiver]; }
    void set_p(size_t sender, size_t receiver, double p);
    NodeClass node_class(size_t i) const { return classes_[i]; }
    double mean_gamma(size_t sender) const;

  private:
    size_t n_;
    std::vector<double> p_;
    std::vector<NodeClass> classes_;
};

// SNR means per class; chosen for clear separation between classes on the
// log2(1+gamma) scale the connectivity score uses.
constexpr double kGammaMeanGood = 15.0;
constexpr double kGammaMeanFade = 3.0;

// One Bernoulli trial for one transmission attempt; consumes exactly one draw.
bool attempt_delivery(const LinkMatrix& link, size_t sender, size_t receiver, RngStream& rng);

// Probability that at least one of k_tx attempts on a link succeeds:
// 1 - (1 - p)^k_tx.
double within_slot_delivery(double p_attempt, unsigned k_tx);

// Receiver-side SNR sample for one reception from `sender`; exponential with
// the sender-class mean. Consumes exactly one draw.
double sample_csi(const LinkMatrix& link, size_t sender, size_t receiver, RngStream& rng);

// Two-class cluster: exactly round(beta * n) nodes are labeled deep-fading,
// selected by a seeded uniform draw without replacement.
LinkMatrix make_two_class_topology(size_t n, double beta, double p_good, double p_fade, RngStream& rng);

// --- CSI tag quantization ----------------------------------------------------
//
// 8-bit log-domain code: tag = floor(log2(1+gamma) / step), step = 1/8,
// saturating at 255. Dequantization returns the lower cell edge, so exact
// powers-of-two-minus-one SNRs (1, 3, 7, ...) round-trip exactly and
// quantize(dequantize(t)) == t for every tag.
constexpr double kCsiTagStep = 0.125;
constexpr uint8_t kCsiTagMax = 255;

uint8_t quantize_csi(double gamma);
double dequantize_csi(uint8_t tag);

}  // namespace wstreamlet::channel
