#pragma once

#include "wstreamlet/scenario.hpp"

namespace wstreamlet::experiments {

// Runs the experiment named by cfg.experiment and returns its result curves.
// E1  leader election policies over the two-class fading sweep
// E2  coded vs replicated payload retrieval over the erasure-rate sweep
// E3  wired vs wireless header-only consensus, small cluster
// E4  per-node payload storage vs chain height
// E5  bootstrap duration vs chain height
// E6  liveness closed forms: bounds, expected finality, k_tx cost curve
// Rejects invalid configs and unknown experiment ids before doing any work.
scenario::ResultTable run_experiment(const config::ScenarioConfig& cfg);

}  // namespace wstreamlet::experiments
