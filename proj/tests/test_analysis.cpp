#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wstreamlet/analysis.hpp"
#include "wstreamlet/rng.hpp"

using namespace wstreamlet;
using namespace wstreamlet::analysis;

TEST_CASE("within-slot floor") {
    CHECK(p_hat(0.95, 2) == doctest::Approx(0.9975).epsilon(1e-14));
    CHECK(p_hat(0.8, 1) == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(p_hat(0.9, 3) == doctest::Approx(0.999).epsilon(1e-12));
    CHECK(p_hat(1.0, 1) == 1.0);
    CHECK(p_hat(0.0, 4) == 0.0);
}

TEST_CASE("binomial tail against independently computed values") {
    CHECK(binomial_tail_geq(9, 6, 0.9216) == doctest::Approx(0.9965501280924707).epsilon(1e-12));
    CHECK(binomial_tail_geq(7, 7, 0.9975) == doctest::Approx(0.9826307044901388).epsilon(1e-12));
    CHECK(binomial_tail_geq(5, 2, 0.3) == doctest::Approx(0.47178).epsilon(1e-12));
    CHECK(binomial_tail_geq(12, 7, 0.55) == doctest::Approx(0.5269302397587156).epsilon(1e-12));

    // edges
    CHECK(binomial_tail_geq(10, 0, 0.5) == 1.0);
    CHECK(binomial_tail_geq(10, 11, 0.99) == 0.0);
    CHECK(binomial_tail_geq(10, 10, 1.0) == 1.0);
    CHECK(binomial_tail_geq(10, 1, 0.0) == 0.0);
}

TEST_CASE("binomial tail matches monte carlo") {
    RngStream rng(31);
    const int kn = 200000;
    int hit = 0;
    for (int t = 0; t < kn; ++t) {
        int successes = 0;
        for (int i = 0; i < 9; ++i)
            if (rng.next_bernoulli(0.7)) ++successes;
        if (successes >= 6) ++hit;
    }
    CHECK(static_cast<double>(hit) / kn ==
          doctest::Approx(binomial_tail_geq(9, 6, 0.7)).epsilon(0.01));
}

TEST_CASE("proposal reach for the deployed cluster") {
    LivenessParams lp;  // n=10 f=3 p_h=0.95 k_tx=2
    CHECK(proposal_reach_probability(lp) == doctest::Approx(0.982631).epsilon(1e-5));
    // needs all 2f+1 = h = 7 honest receptions at the floor rate
    CHECK(proposal_reach_probability(lp) ==
          doctest::Approx(binomial_tail_geq(7, 7, p_hat(0.95, 2))).epsilon(1e-14));
}

TEST_CASE("vote return probability composes per-voter floors") {
    LivenessParams lp;
    // psi is nondecreasing in the cast count
    double prev = 0.0;
    for (unsigned x = 7; x <= 7u; ++x) {
        double v = vote_return_probability(x, lp);
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
    }
    // with fewer than 2f+1 cast votes the leader can never collect a quorum
    CHECK(vote_return_probability(6, lp) == 0.0);
}

TEST_CASE("q lower bound pinned values and monotonicity") {
    LivenessParams lp;
    lp.pi = 0.7;
    CHECK(q_lower_bound(lp) == doctest::Approx(0.675894).epsilon(1e-5));
    lp.pi = 1.0;
    CHECK(q_lower_bound(lp) == doctest::Approx(0.965563).epsilon(1e-5));

    // monotone in every favorable direction
    LivenessParams a;
    a.p_h = 0.8;
    LivenessParams b = a;
    b.p_h = 0.9;
    CHECK(q_lower_bound(b) > q_lower_bound(a));
    b = a;
    b.k_tx = 3;
    CHECK(q_lower_bound(b) > q_lower_bound(a));
    b = a;
    b.pi = 0.5;
    CHECK(q_lower_bound(b) < q_lower_bound(a));

    // probability bounds
    for (double p : {0.5, 0.7, 0.9, 0.99}) {
        LivenessParams c;
        c.p_h = p;
        double q = q_lower_bound(c);
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);
    }
}

TEST_CASE("expected epochs closed form vs direct linear solve") {
    // the cold-start process is a 3-state streak chain: from streak s a
    // success moves to s+1 (absorbing at 3), a failure resets to 0.
    // E_s = 1 + q E_{s+1} + (1-q) E_0 with E_3 = 0; solving the system by
    // substitution gives E_2, then E_1, then E_0.
    for (double q : {0.3, 0.5, 0.8, 0.95}) {
        CAPTURE(q);
        double e2 = 0, e1 = 0, e0 = 0;
        // fixed point: iterate the linear system to convergence as an
        // independent route (no closed-form reuse)
        for (int it = 0; it < 100000; ++it) {
            double n2 = 1 + (1 - q) * e0;
            double n1 = 1 + q * e2 + (1 - q) * e0;
            double n0 = 1 + q * e1 + (1 - q) * e0;
            e2 = n2;
            e1 = n1;
            e0 = n0;
        }
        CHECK(expected_epochs_to_finality(q) == doctest::Approx(e0).epsilon(1e-12));
    }

    CHECK(expected_epochs_to_finality(1.0) == 3.0);
    CHECK(expected_epochs_to_finality(0.9) == doctest::Approx(3.7174211248285314).epsilon(1e-12));
    CHECK(expected_epochs_to_finality(0.5) == doctest::Approx(14.0).epsilon(1e-12));
}

TEST_CASE("expected epochs matches monte carlo") {
    for (double q : {0.5, 0.8, 0.95}) {
        CAPTURE(q);
        RngStream rng(7);
        const int kn = 200000;
        uint64_t total = 0;
        for (int t = 0; t < kn; ++t) {
            int streak = 0;
            uint64_t epochs = 0;
            while (streak < 3) {
                ++epochs;
                streak = rng.next_bernoulli(q) ? streak + 1 : 0;
            }
            total += epochs;
        }
        double mc = static_cast<double>(total) / kn;
        CHECK(expected_epochs_to_finality(q) == doctest::Approx(mc).epsilon(0.02));
    }
}

TEST_CASE("epoch duration and time to finality") {
    CHECK(epoch_duration_ms(10, 10.0, 5.0) == doctest::Approx(115.0).epsilon(1e-12));
    CHECK(epoch_duration_ms(4, 10.0, 5.0) == doctest::Approx(55.0).epsilon(1e-12));
    CHECK(expected_time_to_finality_ms(1.0, 10, 10.0, 5.0) == doctest::Approx(345.0).epsilon(1e-12));
    CHECK(expected_time_to_finality_ms(0.5, 10, 10.0, 5.0) ==
          doctest::Approx(14.0 * 115.0).epsilon(1e-12));
}

TEST_CASE("k_tx optimizer equals brute force and degenerates sensibly") {
    LivenessParams lp;
    lp.pi = 0.7;
    auto opt = optimize_k_tx(lp, 1, 8);
    REQUIRE(opt.curve.size() == 8);

    // recompute every point independently
    double best_cost = 1.0 / 0.0;
    unsigned best_k = 0;
    for (unsigned k = 1; k <= 8; ++k) {
        LivenessParams lk = lp;
        lk.k_tx = k;
        double q = q_lower_bound(lk);
        double cost = q > 0 ? (lp.n + 1) * static_cast<double>(k) * expected_epochs_to_finality(q)
                            : 1.0 / 0.0;
        const auto& pt = opt.curve[k - 1];
        CHECK(pt.k_tx == k);
        CHECK(pt.q == doctest::Approx(q).epsilon(1e-12));
        if (q > 0) CHECK(pt.cost == doctest::Approx(cost).epsilon(1e-12));
        if (cost < best_cost) {
            best_cost = cost;
            best_k = k;
        }
    }
    CHECK(opt.best_k_tx == best_k);
    CHECK(opt.best_cost == doctest::Approx(best_cost).epsilon(1e-12));
    CHECK(opt.best_k_tx == 2);  // deployed operating point

    // q is monotone along the curve
    for (size_t i = 1; i < opt.curve.size(); ++i)
        CHECK(opt.curve[i].q >= opt.curve[i - 1].q);

    // a perfect channel wants a single attempt
    LivenessParams perfect;
    perfect.p_h = 1.0;
    auto po = optimize_k_tx(perfect, 1, 8);
    CHECK(po.best_k_tx == 1);
}
