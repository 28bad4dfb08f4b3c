#include "wstreamlet/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wstreamlet::consensus {

namespace {

// rng substream namespaces within one run
constexpr uint64_t kNsChannel = 1;
constexpr uint64_t kNsCsi = 2;

// synthetic digest domains
constexpr uint64_t kSynthPayload = 0x70;
constexpr uint64_t kSynthCommit = 0x71;
constexpr uint64_t kSynthEquivocal = 0x72;
constexpr uint64_t kSynthFakeVote = 0x73;

uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

ElectionCache::ElectionCache(const std::vector<PublicKeyId>& pks, uint64_t max_epoch)
    : n_(pks.size()), max_epoch_(max_epoch), table_((max_epoch + 1) * pks.size()) {
    for (uint64_t e = 0; e <= max_epoch; ++e)
        for (size_t i = 0; i < n_; ++i) table_[e * n_ + i] = crypto::hash_nor(e, pks[i]);
}

double RunMetrics::mean_finality_epochs() const {
    if (finality_segments.empty()) return 0.0;
    double sum = 0.0;
    for (uint64_t s : finality_segments) sum += static_cast<double>(s);
    return sum / static_cast<double>(finality_segments.size());
}

double RunMetrics::mean_finality_latency_ms(const tdma::FrameTiming& t, uint32_t n) const {
    return mean_finality_epochs() * t.epoch_duration_ms(n);
}

double RunMetrics::percentile_finality_epochs(double p) const {
    if (finality_segments.empty()) return 0.0;
    std::vector<uint64_t> sorted(finality_segments);
    std::sort(sorted.begin(), sorted.end());
    double rank = p * static_cast<double>(sorted.size());
    size_t idx = rank <= 1.0 ? 0 : static_cast<size_t>(std::ceil(rank)) - 1;
    if (idx >= sorted.size()) idx = sorted.size() - 1;
    return static_cast<double>(sorted[idx]);
}

uint32_t oracle_leader(const channel::LinkMatrix& link, const tdma::FaultPlan& faults,
                       const std::vector<PublicKeyId>& pks) {
    const uint32_t n = static_cast<uint32_t>(link.size());
    uint32_t best = n;
    double best_score = -1.0;
    for (uint32_t i = 0; i < n; ++i) {
        if (faults.mode(i) != tdma::FaultMode::Honest) continue;
        double worst = 1.0;
        for (uint32_t j = 0; j < n; ++j) {
            if (j == i || faults.mode(j) != tdma::FaultMode::Honest) continue;
            worst = std::min(worst, link.p(i, j));
        }
        if (best == n || worst > best_score ||
            (worst == best_score && pks[i] < pks[best])) {
            best = i;
            best_score = worst;
        }
    }
    if (best == n) throw std::invalid_argument("fault plan leaves no honest node");
    return best;
}

ConsensusEngine::ConsensusEngine(const EngineConfig& cfg, channel::LinkMatrix link,
                                 tdma::FaultPlan faults, RngStream rng,
                                 const ElectionCache* cache)
    : cfg_(cfg), link_(std::move(link)), faults_(std::move(faults)), rng_(rng), cache_(cache) {
    const uint32_t n = cfg_.n;
    if (n == 0 || link_.size() != n) throw std::invalid_argument("link matrix size mismatch");
    if (n < 3 * cfg_.f + 1) throw std::invalid_argument("need n >= 3f+1 nodes");
    if (n > 64) throw std::invalid_argument("node sets above 64 are not supported");
    if (cfg_.k_tx == 0) throw std::invalid_argument("k_tx must be positive");
    if (cfg_.weight_window == 0) throw std::invalid_argument("weight_window must be positive");

    pks_.resize(n);
    secrets_.resize(n);
    for (uint32_t i = 0; i < n; ++i) {
        std::string label = "node-" + std::to_string(i);
        auto kp = scheme_.generate_key(
            ByteView(reinterpret_cast<const uint8_t*>(label.data()), label.size()));
        pks_[i] = kp.id;
        secrets_[i] = std::move(kp.secret);
        node_of_pk_.emplace(pks_[i], i);
    }

    slot_order_.resize(n);
    std::iota(slot_order_.begin(), slot_order_.end(), 0u);
    std::sort(slot_order_.begin(), slot_order_.end(),
              [this](uint32_t a, uint32_t b) { return pks_[a] < pks_[b]; });

    nodes_.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        NodeRuntime nr;
        nr.index = i;
        nr.pk = pks_[i];
        nr.fault = faults_.mode(i);
        nr.table = cale::WeightTable::uniform(n, cfg_.alpha, cfg_.omega_min);
        nr.weight_pow.assign(n, 1.0);
        nodes_.push_back(std::move(nr));
    }

    if (cfg_.policy == LeaderPolicy::Oracle) oracle_leader_ = oracle_leader(link_, faults_, pks_);
    if (cfg_.policy == LeaderPolicy::Static && cfg_.static_leader >= n)
        throw std::invalid_argument("static_leader out of range");

    leader_view_.assign(n, 0);
    decoded_.resize(n);
    outbox_.resize(n);
    tallies_.resize(n);
    heard_.resize(n);
    scratch_.votes_heard.assign(n, 0);
}

const RunMetrics& ConsensusEngine::run(uint64_t epochs) {
    for (uint64_t i = 0; i < epochs; ++i) run_one(scratch_);
    return metrics_;
}

tdma::EpochTrace ConsensusEngine::step() {
    tdma::EpochTrace trace;
    run_one(trace);
    return trace;
}

double ConsensusEngine::lottery_u(uint64_t epoch, size_t node) const {
    if (cache_ != nullptr && epoch <= cache_->max_epoch() && cache_->n() == pks_.size())
        return cache_->u(epoch, node);
    return crypto::hash_nor(epoch, pks_[node]);
}

uint32_t ConsensusEngine::elect(uint64_t epoch, NodeRuntime& node) {
    const uint32_t n = cfg_.n;
    switch (cfg_.policy) {
        case LeaderPolicy::Static:
            return cfg_.static_leader;
        case LeaderPolicy::Oracle:
            return oracle_leader_;
        case LeaderPolicy::Random: {
            uint32_t best = 0;
            double best_u = lottery_u(epoch, 0);
            for (uint32_t i = 1; i < n; ++i) {
                double u = lottery_u(epoch, i);
                if (u > best_u || (u == best_u && pks_[i] < pks_[best])) {
                    best = i;
                    best_u = u;
                }
            }
            return best;
        }
        case LeaderPolicy::Cale: {
            refresh_table(node, (epoch - 1) / cfg_.weight_window);
            uint32_t best = 0;
            double best_rho = std::numeric_limits<double>::infinity();
            for (uint32_t i = 0; i < n; ++i) {
                // exponential race: min of -ln(u_i) / w_i^alpha lands on i
                // with probability proportional to w_i^alpha
                double rho = -std::log(lottery_u(epoch, i)) / node.weight_pow[i];
                if (rho < best_rho || (rho == best_rho && pks_[i] < pks_[best])) {
                    best = i;
                    best_rho = rho;
                }
            }
            return best;
        }
    }
    return 0;
}

void ConsensusEngine::refresh_table(NodeRuntime& node, uint64_t window) {
    if (node.table_window == window) return;
    uint64_t basis = window >= 2 ? (window - 1) * cfg_.weight_window : 0;
    bool changed = node.table_window == ~0ull;
    while (node.scores_applied < node.score_events.size() &&
           node.score_events[node.scores_applied].fin_epoch <= basis) {
        const auto& ev = node.score_events[node.scores_applied++];
        node.table.omega_fin[ev.proposer] = ev.score;
        changed = true;
    }
    if (changed) {
        node.table.basis_epoch = basis;
        cale::update_weights(node.table);
        for (size_t i = 0; i < node.weight_pow.size(); ++i)
            node.weight_pow[i] = std::pow(node.table.weights[i], node.table.alpha);
    }
    node.table_window = window;
}

void ConsensusEngine::import_ancestry(NodeRuntime& node, const chain::NotarizedRecordPtr& rec) {
    if (node.view.has_block(rec->block_hash)) return;
    std::vector<chain::NotarizedRecordPtr> missing;
    chain::NotarizedRecordPtr cur = rec;
    for (;;) {
        missing.push_back(cur);
        const Digest& parent = cur->block.parent;
        if (node.view.has_block(parent)) break;
        cur = pool_.at(parent);
    }
    for (auto it = missing.rbegin(); it != missing.rend(); ++it) absorb_record(node, *it);
}

void ConsensusEngine::absorb_record(NodeRuntime& node, const chain::NotarizedRecordPtr& rec) {
    if (!node.view.add_notarized(rec)) return;
    auto batch = node.view.update_finality();
    if (batch.empty()) return;
    // rec is the block whose arrival completed the finality proof, so its
    // epoch is when this view could first have learned the outcome
    uint64_t fin_epoch = rec->block.epoch;
    for (const auto& b : batch) {
        node.score_events.push_back(
            {fin_epoch, node_of_pk_.at(b->block.proposer), cale::connectivity_score(b->qc)});
        auto [it, fresh] = finalized_height_hash_.try_emplace(b->block.height, b->block_hash);
        if (!fresh && !(it->second == b->block_hash)) metrics_.safety_violation = true;
    }
}

void ConsensusEngine::absorb_observer(const chain::NotarizedRecordPtr& rec) {
    if (!observer_.add_notarized(rec)) return;
    auto batch = observer_.update_finality();
    if (batch.empty()) return;
    metrics_.finality_events.push_back(
        {epoch_, static_cast<double>(epoch_) * cfg_.timing.epoch_duration_ms(cfg_.n)});
    for (const auto& b : batch) {
        auto [it, fresh] = finalized_height_hash_.try_emplace(b->block.height, b->block_hash);
        if (!fresh && !(it->second == b->block_hash)) metrics_.safety_violation = true;
    }
}

void ConsensusEngine::tally_vote(uint32_t receiver, uint32_t voter, uint8_t variant) {
    const chain::Vote& vote = outbox_[voter][variant].vote;
    auto& ts = tallies_[receiver];
    for (auto& t : ts) {
        if (t.hash == vote.block_hash) {
            if ((t.mask >> voter) & 1) return;  // one vote per signer per block
            t.mask |= 1ull << voter;
            ++t.count;
            heard_[receiver].push_back({voter, variant});
            return;
        }
    }
    ts.push_back({vote.block_hash, 1ull << voter, 1});
    heard_[receiver].push_back({voter, variant});
}

chain::NotarizedRecordPtr ConsensusEngine::assemble_record(const ProposalVariant& prop,
                                                           uint32_t assembler,
                                                           const Tally& tally) {
    std::vector<chain::Vote> votes;
    votes.reserve(tally.count);
    for (const HeardRef& h : heard_[assembler]) {
        const chain::Vote& v = outbox_[h.voter][h.variant].vote;
        if (v.block_hash == prop.block_hash) votes.push_back(v);
    }
    std::optional<chain::QuorumCertificate> qc;
    if (cfg_.full_verify) {
        qc = chain::is_notarized(prop.block_hash, epoch_, votes, cfg_.f,
                                 [this](ByteView payload, const PublicKeyId& signer,
                                        const crypto::Signature& sig) {
                                     return scheme_.verify(payload, signer, sig);
                                 });
    } else {
        // every vote in outbox_ was signed by this engine an instant ago;
        // re-checking those signatures cannot change the outcome
        qc = chain::QuorumCertificate{prop.block_hash, epoch_, std::move(votes)};
    }
    if (!qc) return nullptr;
    auto rec = std::make_shared<chain::NotarizedRecord>();
    rec->block = prop.block;
    rec->qc = std::move(*qc);
    rec->block_hash = prop.block_hash;
    return rec;
}

Digest ConsensusEngine::synthetic_digest(uint64_t a, uint64_t b, uint64_t c) {
    Digest d;
    uint64_t seed = mix64(mix64(mix64(a) + b) + c);
    for (int w = 0; w < 4; ++w) write_u64_be(d.bytes.data() + 8 * w, mix64(seed + 1 + w));
    return d;
}

void ConsensusEngine::run_one(tdma::EpochTrace& trace) {
    const uint32_t n = cfg_.n;
    const uint64_t e = ++epoch_;
    const uint32_t quorum = 2 * cfg_.f + 1;

    trace.epoch = e;
    trace.leader = n;
    trace.proposal_receivers = 0;
    trace.notarized = false;
    trace.on_air_attempts = tdma::scheduled_attempts(n, cfg_.k_tx);
    trace.wall_time_ms = cfg_.timing.epoch_duration_ms(n);
    if (trace.votes_heard.size() != n) trace.votes_heard.assign(n, 0);
    else std::fill(trace.votes_heard.begin(), trace.votes_heard.end(), 0);

    for (uint32_t i = 0; i < n; ++i) {
        decoded_[i].reset();
        outbox_[i].clear();
        tallies_[i].clear();
        heard_[i].clear();
    }

    // Every view elects with its own weight table. Honest views are expected
    // to agree; divergence is counted, and the slot-0 rule below keeps a
    // split election from putting two proposals on air.
    uint32_t claimants = 0;
    uint32_t claimant = n;
    uint32_t first_honest = n;
    bool disagree = false;
    for (uint32_t i = 0; i < n; ++i) {
        uint32_t li = elect(e, nodes_[i]);
        leader_view_[i] = li;
        if (li == i) {
            ++claimants;
            claimant = i;
        }
        if (nodes_[i].fault == tdma::FaultMode::Honest) {
            if (first_honest == n) first_honest = li;
            else if (li != first_honest) disagree = true;
        }
    }
    if (disagree) ++metrics_.leader_disagreements;

    RngStream epoch_chan = rng_.derive(kNsChannel, e);

    const bool have_leader = claimants == 1;
    const uint32_t L = have_leader ? claimant : n;
    trace.leader = L;
    if (have_leader && faults_.mode(L) == tdma::FaultMode::Honest) ++metrics_.honest_leader_epochs;

    ProposalVariant prop_a;
    ProposalVariant prop_b;
    bool proposing = false;
    bool equivocating = false;
    if (have_leader && faults_.mode(L) != tdma::FaultMode::SilentLeader) {
        proposing = true;
        NodeRuntime& ln = nodes_[L];
        Digest parent_hash = ln.view.longest_tip_hash();
        const chain::NotarizedRecord* parent = ln.view.find(parent_hash);
        prop_a.block.epoch = e;
        prop_a.block.parent = parent_hash;
        prop_a.block.payload_id = synthetic_digest(kSynthPayload, e, L);
        prop_a.block.data_commitment = synthetic_digest(kSynthCommit, e, L);
        prop_a.block.proposer = pks_[L];
        prop_a.block.height = parent->block.height + 1;
        prop_a.block_hash = prop_a.block.digest();
        prop_a.parent_rec =
            parent_hash == ln.view.genesis_hash() ? nullptr : pool_.at(parent_hash);

        equivocating = faults_.mode(L) == tdma::FaultMode::Equivocate;
        if (equivocating) {
            prop_b = prop_a;
            prop_b.block.payload_id = synthetic_digest(kSynthEquivocal, e, L);
            prop_b.block_hash = prop_b.block.digest();
        }

        decoded_[L] = prop_a;
        trace.proposal_receivers |= 1ull << L;
        for (uint32_t r = 0; r < n; ++r) {
            if (r == L) continue;
            auto att = tdma::first_delivery(link_, L, r, cfg_.k_tx, epoch_chan.derive(0, r));
            if (!att) continue;
            // an equivocating leader alternates the two headers across its
            // k_tx repeats; the receiver keeps whichever it decoded first
            decoded_[r] = (equivocating && (*att & 1)) ? prop_b : prop_a;
            trace.proposal_receivers |= 1ull << r;
        }
    }

    for (uint32_t r = 0; r < n; ++r) {
        if (!decoded_[r]) continue;
        NodeRuntime& node = nodes_[r];
        const ProposalVariant& pv = *decoded_[r];
        if (pv.parent_rec) import_ancestry(node, pv.parent_rec);
        if (node.fault == tdma::FaultMode::SilentVoter) continue;
        if (!chain::voting_eligibility(node.view, pv.block, pks_[leader_view_[r]], e)) continue;

        uint8_t tag;
        if (node.fault == tdma::FaultMode::CsiMisreport) {
            tag = channel::kCsiTagMax;
        } else if (r == L) {
            tag = channel::kCsiTagMax;  // own header, perfect self channel
        } else {
            RngStream csi = rng_.derive(kNsCsi, e, r);
            tag = channel::quantize_csi(channel::sample_csi(link_, L, r, csi));
        }

        Bytes payload = chain::Vote::encode_payload(e, pv.block_hash, tag);
        crypto::Signature sig = scheme_.sign(payload, secrets_[r]);
        chain::Vote vote;
        vote.epoch = e;
        vote.block_hash = pv.block_hash;
        vote.csi_tag = tag;
        vote.envelope = {std::move(payload), pks_[r], sig};
        outbox_[r].push_back({std::move(vote), true});

        if (node.fault == tdma::FaultMode::Equivocate) {
            Digest fake = synthetic_digest(kSynthFakeVote, e, r);
            Bytes p2 = chain::Vote::encode_payload(e, fake, tag);
            crypto::Signature s2 = scheme_.sign(p2, secrets_[r]);
            chain::Vote v2;
            v2.epoch = e;
            v2.block_hash = fake;
            v2.csi_tag = tag;
            v2.envelope = {std::move(p2), pks_[r], s2};
            outbox_[r].push_back({std::move(v2), true});
        }

        if (node.fault == tdma::FaultMode::Honest && outbox_[r].size() > 1)
            ++metrics_.honest_double_votes;
        if (cfg_.collect_vote_log)
            for (const auto& pending : outbox_[r])
                vote_log_.push_back({e, r, pending.vote.block_hash});
    }

    // Vote slots, one per node in public key order. The grid is open loop:
    // a node with no vote still owns its slot and fills it with a beacon
    // naming its longest notarized tip, so certificates a node missed reach
    // it through the same broadcast medium. Without this, views can fork
    // apart for good when a leader misses a quorum that other receivers
    // assembled.
    for (uint32_t s = 1; s <= n; ++s) {
        uint32_t v = slot_order_[s - 1];
        const auto& box = outbox_[v];
        if (box.empty()) {
            if (nodes_[v].fault == tdma::FaultMode::SilentVoter) continue;
            const Digest tip = nodes_[v].view.longest_tip_hash();
            if (tip == nodes_[v].view.genesis_hash()) continue;
            const chain::NotarizedRecordPtr& rec = pool_.at(tip);
            for (uint32_t r = 0; r < n; ++r) {
                if (r == v) continue;
                auto att = tdma::first_delivery(link_, v, r, cfg_.k_tx, epoch_chan.derive(s, r));
                if (!att) continue;
                if (!nodes_[r].view.has_block(tip)) import_ancestry(nodes_[r], rec);
            }
            continue;
        }
        tally_vote(v, v, 0);  // the speaker hears itself
        trace.votes_heard[v] |= 1ull << v;
        for (uint32_t r = 0; r < n; ++r) {
            if (r == v) continue;
            auto att = tdma::first_delivery(link_, v, r, cfg_.k_tx, epoch_chan.derive(s, r));
            if (!att) continue;
            uint8_t variant = box.size() > 1 ? static_cast<uint8_t>(*att & 1) : 0;
            tally_vote(r, v, variant);
            trace.votes_heard[r] |= 1ull << v;
        }
    }

    for (uint32_t r = 0; r < n; ++r) {
        if (!decoded_[r]) continue;
        const ProposalVariant& pv = *decoded_[r];
        for (const auto& t : tallies_[r]) {
            if (t.count < quorum || !(t.hash == pv.block_hash)) continue;
            if (pool_.find(t.hash) != pool_.end()) continue;
            chain::NotarizedRecordPtr rec = assemble_record(pv, r, t);
            if (!rec) continue;
            pool_.emplace(t.hash, rec);
            absorb_observer(rec);
        }
    }

    // The assembled record bundles its certificate, so possession is proof
    // of notarization no matter how many votes a node heard itself. Any
    // single vote naming the hash is enough of a hint to pull the record
    // from a witness during the guard interval; it is a couple hundred
    // bytes and the witness set holds 2f+1 nodes, so the fetch is treated
    // as reliable.
    for (uint32_t r = 0; r < n; ++r) {
        for (const auto& t : tallies_[r]) {
            auto it = pool_.find(t.hash);
            if (it != pool_.end()) import_ancestry(nodes_[r], it->second);
        }
    }

    if (proposing) {
        for (const auto& t : tallies_[L]) {
            if (t.hash == prop_a.block_hash && t.count >= quorum) {
                trace.notarized = true;
                break;
            }
        }
    }

    ++metrics_.epochs_run;
    metrics_.on_air_attempts += trace.on_air_attempts;
    metrics_.flags.push_back(trace.notarized ? 1 : 0);
    if (trace.notarized) {
        ++metrics_.notarized_count;
        if (++success_streak_ == 3) {
            metrics_.finality_segments.push_back(e - segment_start_epoch_);
            segment_start_epoch_ = e;
            success_streak_ = 0;
        }
    } else {
        success_streak_ = 0;
    }

    if (cfg_.collect_traces) traces_.push_back(trace);
}

}  // namespace wstreamlet::consensus
