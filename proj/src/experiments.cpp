#include "wstreamlet/experiments.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "wstreamlet/analysis.hpp"
#include "wstreamlet/coding.hpp"
#include "wstreamlet/consensus.hpp"

namespace wstreamlet::experiments {

namespace {

using config::ChannelType;
using config::ScenarioConfig;
using scenario::ResultRow;
using scenario::ResultTable;

std::string sweep(const char* name, double v) {
    return std::string(name) + "=" + scenario::format_double(v);
}

std::string sweep(const char* name, uint64_t v) {
    return std::string(name) + "=" + std::to_string(v);
}

ResultRow make_row(const ScenarioConfig& cfg, std::string sweep_str, std::string mode,
                   std::string metric) {
    ResultRow r;
    r.experiment = cfg.experiment;
    r.sweep = std::move(sweep_str);
    r.mode = std::move(mode);
    r.metric = std::move(metric);
    r.seed = cfg.seed;
    return r;
}

void push_finalized(ResultTable& t, ResultRow row) {
    scenario::finalize_row(row);
    t.rows.push_back(std::move(row));
}

consensus::EngineConfig engine_config(const ScenarioConfig& cfg, consensus::LeaderPolicy policy) {
    consensus::EngineConfig ec;
    ec.n = cfg.n;
    ec.f = cfg.f();
    ec.k_tx = cfg.k_tx;
    ec.timing = {cfg.t_slot_ms, cfg.t_guard_ms};
    ec.policy = policy;
    ec.alpha = cfg.alpha;
    ec.omega_min = cfg.omega_min;
    // every vote a sweep engine sees was signed by that same engine, so the
    // redundant signature re-check stays off in the hot path; the protocol
    // test suites run with it on
    ec.full_verify = false;
    return ec;
}

channel::LinkMatrix make_link(const ScenarioConfig& cfg, RngStream topo_rng) {
    switch (cfg.channel) {
        case ChannelType::Homogeneous:
            return channel::LinkMatrix(cfg.n, cfg.p_h);
        case ChannelType::Wired:
            return channel::LinkMatrix(cfg.n, 1.0);
        case ChannelType::TwoClass:
            return channel::make_two_class_topology(cfg.n, cfg.beta, cfg.p_good, cfg.p_fade,
                                                    topo_rng);
    }
    throw std::invalid_argument("unknown channel type");
}

std::vector<crypto::PublicKeyId> default_node_keys(uint32_t n) {
    crypto::KeyedHashScheme scheme;
    std::vector<crypto::PublicKeyId> pks(n);
    for (uint32_t i = 0; i < n; ++i) {
        std::string label = "node-" + std::to_string(i);
        pks[i] = scheme
                     .generate_key(ByteView(reinterpret_cast<const uint8_t*>(label.data()),
                                            label.size()))
                     .id;
    }
    return pks;
}

uint32_t source_symbol_count(const ScenarioConfig& cfg) {
    return static_cast<uint32_t>((cfg.payload_bytes + cfg.b_sym - 1) / cfg.b_sym);
}

uint64_t proof_bytes(uint32_t total) {
    uint32_t depth = 0;
    while ((1u << depth) < total) ++depth;
    return 32ull * depth;
}

ResultTable run_e1(const ScenarioConfig& cfg) {
    ResultTable t;
    t.config = cfg;
    static const double kBetas[] = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    struct PolicyEntry {
        consensus::LeaderPolicy policy;
        const char* name;
    };
    static const PolicyEntry kPolicies[] = {
        {consensus::LeaderPolicy::Cale, "cale"},
        {consensus::LeaderPolicy::Random, "random"},
        {consensus::LeaderPolicy::Oracle, "oracle"},
    };

    consensus::ElectionCache cache(default_node_keys(cfg.n), cfg.epochs);

    for (double beta : kBetas) {
        ScenarioConfig point = cfg;
        point.beta = beta;
        ResultRow rows[3];
        for (int p = 0; p < 3; ++p)
            rows[p] = make_row(cfg, sweep("beta", beta), kPolicies[p].name, "notarization_rate");
        for (uint32_t run = 0; run < cfg.runs; ++run) {
            RngStream run_rng(cfg.seed + run);
            channel::LinkMatrix link = make_link(point, run_rng.derive(0));
            for (int p = 0; p < 3; ++p) {
                // the same topology and the same channel stream face every
                // policy, so curves differ only through leader choice
                consensus::ConsensusEngine engine(engine_config(cfg, kPolicies[p].policy), link,
                                                  tdma::FaultPlan::honest(cfg.n),
                                                  run_rng.derive(1), &cache);
                engine.run(cfg.epochs);
                rows[p].samples.push_back(engine.metrics().notarization_rate());
            }
        }
        for (int p = 0; p < 3; ++p) push_finalized(t, std::move(rows[p]));
    }
    return t;
}

ResultTable run_e2(const ScenarioConfig& cfg) {
    ResultTable t;
    t.config = cfg;
    static const double kPers[] = {0.0, 0.1, 0.2, 0.3, 0.4};

    const uint32_t k = source_symbol_count(cfg);
    const uint32_t k_req = coding::required_symbols(k, cfg.epsilon);
    const uint64_t b_obj = cfg.b_sym + proof_bytes(cfg.m);
    const uint64_t trials = cfg.epochs;  // retrieval attempts per run

    for (double per : kPers) {
        for (int coded = 1; coded >= 0; --coded) {
            coding::RetrievalParams rp;
            rp.k = k;
            rp.k_req = coded ? k_req : k;
            rp.total = coded ? cfg.m : k;
            rp.attempts_per_symbol = cfg.r;
            rp.lanes = cfg.c;
            rp.per = per;
            rp.b_obj = b_obj;
            rp.bandwidth_Bps = cfg.bandwidth;
            rp.per_request_overhead_s = cfg.per_request_overhead_s;
            rp.t_max_s = cfg.t_max_s;
            rp.coded = coded != 0;

            const char* mode = coded ? "coded" : "replication";
            ResultRow succ = make_row(cfg, sweep("per", per), mode, "success_rate");
            ResultRow lat = make_row(cfg, sweep("per", per), mode, "mean_latency_ms");
            for (uint32_t run = 0; run < cfg.runs; ++run) {
                RngStream run_rng(cfg.seed + run);
                uint64_t ok = 0;
                double latency_sum_ms = 0.0;
                for (uint64_t trial = 0; trial < trials; ++trial) {
                    // both modes consume the same per-(symbol, attempt)
                    // draws: paired comparison under common randomness
                    auto res = coding::simulate_retrieval(rp, run_rng.derive(trial));
                    ok += res.success ? 1 : 0;
                    latency_sum_ms += res.latency_s * 1000.0;
                }
                succ.samples.push_back(static_cast<double>(ok) / static_cast<double>(trials));
                lat.samples.push_back(latency_sum_ms / static_cast<double>(trials));
            }
            push_finalized(t, std::move(succ));
            push_finalized(t, std::move(lat));
        }
    }
    return t;
}

ResultTable run_e3(const ScenarioConfig& cfg) {
    ResultTable t;
    t.config = cfg;
    struct Medium {
        const char* name;
        ChannelType channel;
    };
    static const Medium kMediums[] = {
        {"wired", ChannelType::Wired},
        {"wireless", ChannelType::Homogeneous},
    };
    consensus::LeaderPolicy policy = cfg.policy == config::Policy::Random
                                         ? consensus::LeaderPolicy::Random
                                     : cfg.policy == config::Policy::Oracle
                                         ? consensus::LeaderPolicy::Oracle
                                         : consensus::LeaderPolicy::Cale;

    for (const Medium& m : kMediums) {
        ScenarioConfig point = cfg;
        point.channel = m.channel;
        std::string sweep_str = std::string("medium=") + m.name;
        ResultRow rate = make_row(cfg, sweep_str, m.name, "notarization_rate");
        ResultRow lat_avg = make_row(cfg, sweep_str, m.name, "finality_latency_avg_ms");
        ResultRow lat_p95 = make_row(cfg, sweep_str, m.name, "finality_latency_p95_ms");
        for (uint32_t run = 0; run < cfg.runs; ++run) {
            RngStream run_rng(cfg.seed + run);
            channel::LinkMatrix link = make_link(point, run_rng.derive(0));
            consensus::ConsensusEngine engine(engine_config(cfg, policy), link,
                                              tdma::FaultPlan::honest(cfg.n), run_rng.derive(1));
            engine.run(cfg.epochs);
            const auto& metrics = engine.metrics();
            tdma::FrameTiming timing{cfg.t_slot_ms, cfg.t_guard_ms};
            rate.samples.push_back(metrics.notarization_rate());
            lat_avg.samples.push_back(metrics.mean_finality_latency_ms(timing, cfg.n));
            lat_p95.samples.push_back(metrics.percentile_finality_epochs(0.95) *
                                      timing.epoch_duration_ms(cfg.n));
        }
        push_finalized(t, std::move(rate));
        push_finalized(t, std::move(lat_avg));
        push_finalized(t, std::move(lat_p95));
    }
    return t;
}

ResultTable run_e4(const ScenarioConfig& cfg) {
    ResultTable t;
    t.config = cfg;
    static const uint64_t kHeights[] = {20, 50, 75, 100, 125, 150};
    const uint32_t k = source_symbol_count(cfg);
    struct Layout {
        std::string name;
        coding::StorageMode mode;
        uint32_t s;
    };
    // the coded plane is shown at the configured storage-set size and at ten
    // times that size: the per-node curve scales down by exactly 10x
    const Layout kLayouts[] = {
        {"replication", coding::StorageMode::Replication, cfg.s},
        {"coded_s" + std::to_string(cfg.s), coding::StorageMode::Coded, cfg.s},
        {"coded_s" + std::to_string(cfg.s * 10), coding::StorageMode::Coded, cfg.s * 10},
    };
    for (uint64_t h : kHeights) {
        for (const Layout& lay : kLayouts) {
            ResultRow row = make_row(cfg, sweep("height", h), lay.name, "per_node_storage_bytes");
            row.samples.push_back(coding::per_node_storage_bytes(lay.mode, h, cfg.payload_bytes,
                                                                 k, cfg.m, lay.s));
            push_finalized(t, std::move(row));
        }
    }
    return t;
}

ResultTable run_e5(const ScenarioConfig& cfg) {
    ResultTable t;
    t.config = cfg;
    static const uint64_t kHeights[] = {1000, 2000, 3000, 4000, 5000};
    struct Mode {
        const char* name;
        coding::BootstrapMode mode;
    };
    static const Mode kModes[] = {
        {"full_sync", coding::BootstrapMode::Full},
        {"state_first", coding::BootstrapMode::StateFirst},
    };
    for (uint64_t h : kHeights) {
        for (const Mode& m : kModes) {
            ResultRow row = make_row(cfg, sweep("height", h), m.name, "bootstrap_s");
            row.samples.push_back(coding::bootstrap_duration_s(m.mode, h, cfg.header_bytes,
                                                               cfg.payload_bytes, cfg.bandwidth,
                                                               cfg.per_request_overhead_s));
            push_finalized(t, std::move(row));
        }
    }
    return t;
}

ResultTable run_e6(const ScenarioConfig& cfg) {
    ResultTable t;
    t.config = cfg;

    static const double kQGrid[] = {0.3, 0.5, 0.8, 0.9, 0.95, 1.0};
    for (double q : kQGrid) {
        ResultRow epochs = make_row(cfg, sweep("q", q), "closed_form", "expected_epochs");
        epochs.samples.push_back(analysis::expected_epochs_to_finality(q));
        push_finalized(t, std::move(epochs));
        ResultRow time = make_row(cfg, sweep("q", q), "closed_form", "expected_time_ms");
        time.samples.push_back(
            analysis::expected_time_to_finality_ms(q, cfg.n, cfg.t_slot_ms, cfg.t_guard_ms));
        push_finalized(t, std::move(time));
    }

    static const double kPhGrid[] = {0.8, 0.9, 0.95};
    for (double p_h : kPhGrid) {
        for (unsigned k_tx = 1; k_tx <= 3; ++k_tx) {
            analysis::LivenessParams lp;
            lp.n = cfg.n;
            lp.f = cfg.f();
            lp.p_h = p_h;
            lp.k_tx = k_tx;
            lp.pi = 1.0;  // honest leader held fixed, as in the dominance check
            std::string mode = "ktx" + std::to_string(k_tx);
            ResultRow ph = make_row(cfg, sweep("p_h", p_h), mode, "p_hat");
            ph.samples.push_back(analysis::p_hat(p_h, k_tx));
            push_finalized(t, std::move(ph));
            ResultRow qb = make_row(cfg, sweep("p_h", p_h), mode, "q_lower_bound");
            qb.samples.push_back(analysis::q_lower_bound(lp));
            push_finalized(t, std::move(qb));
        }
    }

    analysis::LivenessParams lp;
    lp.n = cfg.n;
    lp.f = cfg.f();
    lp.p_h = cfg.p_h;
    lp.k_tx = cfg.k_tx;
    // cost curve under a uniformly random honest leader
    lp.pi = static_cast<double>(cfg.n - cfg.f()) / cfg.n;
    auto opt = analysis::optimize_k_tx(lp, 1, 8);
    for (const auto& pt : opt.curve) {
        ResultRow row = make_row(cfg, sweep("k_tx", static_cast<uint64_t>(pt.k_tx)), "optimizer",
                                 "expected_cost");
        row.samples.push_back(pt.cost);
        push_finalized(t, std::move(row));
    }
    ResultRow best = make_row(cfg, "k_tx=best", "optimizer", "k_tx_best");
    best.samples.push_back(static_cast<double>(opt.best_k_tx));
    push_finalized(t, std::move(best));
    return t;
}

}  // namespace

ResultTable run_experiment(const ScenarioConfig& cfg) {
    cfg.validate();
    if (cfg.experiment == "E1") return run_e1(cfg);
    if (cfg.experiment == "E2") return run_e2(cfg);
    if (cfg.experiment == "E3") return run_e3(cfg);
    if (cfg.experiment == "E4") return run_e4(cfg);
    if (cfg.experiment == "E5") return run_e5(cfg);
    if (cfg.experiment == "E6") return run_e6(cfg);
    throw std::invalid_argument("unknown experiment id: " + cfg.experiment);
}

}  // namespace wstreamlet::experiments
