#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "errors.hpp"
#include "oracle.hpp"
#include "starchain.hpp"
#include "test_util.hpp"

using namespace cps;

TEST_CASE("loss distribution") {
    SUBCASE("pmf at lambda 1 is 2^-(j+1)") {
        for (int j = 0; j < 10; ++j)
            CHECK(loss_pmf(1.0, j) == doctest::Approx(std::pow(2.0, -(j + 1))).epsilon(1e-12));
    }
    SUBCASE("pmf nearly exhausts the mass by j = 200") {
        for (double lam : {0.1, 1.0}) {
            double sum = 0;
            for (int j = 0; j <= 200; ++j) sum += loss_pmf(lam, j);
            CHECK(sum >= 1.0 - std::pow(1.0 / (1.0 + lam), 201));
        }
    }
    SUBCASE("sampler mean and pmf distance") {
        for (double lam : {0.1, 1.0}) {
            RngStream rng(101);
            const int N = 200000;
            std::map<int64_t, int64_t> hist;
            double sum = 0, sumsq = 0;
            for (int i = 0; i < N; ++i) {
                int64_t z = sample_loss(lam, rng);
                hist[z]++;
                sum += double(z);
                sumsq += double(z) * double(z);
            }
            double m = sum / N;
            double sd = std::sqrt((sumsq - N * m * m) / (N - 1));
            CHECK(std::abs(m - 1.0 / lam) <= 3 * sd / std::sqrt(double(N)));
            double tv = 0;
            for (int j = 0; j <= 200; ++j) {
                double emp = hist.count(j) ? double(hist[j]) / N : 0.0;
                tv += std::abs(emp - loss_pmf(lam, j));
            }
            CHECK(tv / 2 < 0.01);
        }
    }
    SUBCASE("lambda 0 rejected") {
        RngStream rng(1);
        CHECK_THROWS_AS(sample_loss(0.0, rng), Error);
    }
}

TEST_CASE("parameter block") {
    StarChainParams p = make_star_chain_params(0.1, 10000, 0.1);
    CHECK(p.level == 600);
    CHECK(p.down_rate() == doctest::Approx(600.0));
    CHECK(p.up_rate() == doctest::Approx(900.0));
    CHECK_THROWS_AS(make_star_chain_params(0.1, 10000, 0.3), Error);
    CHECK_THROWS_AS(make_star_chain_params(1e-6, 100, 0.1), Error);  // L < 1
}

TEST_CASE("theta") {
    StarChainParams p = make_star_chain_params(0.1, 10000, 0.1);
    CHECK(theta_of(p) == doctest::Approx((0.1 - 0.01) / 1.1).epsilon(1e-12));

    // delta lambda^2 n -> infinity pushes theta to lambda/(1+lambda)
    StarChainParams big = make_star_chain_params(0.1, 100000000, 0.1);
    CHECK(theta_of(big) == doctest::Approx(0.1 / 1.1).epsilon(1e-4));

    // boundary of the regime errors out instead of clamping
    StarChainParams edge = make_star_chain_params(0.1, 1000, 0.1);  // delta lambda^2 n = 1
    CHECK_THROWS_AS(theta_of(edge), Error);
}

TEST_CASE("supermartingale drift") {
    StarChainParams p = make_star_chain_params(0.1, 10000, 0.1);
    double theta = theta_of(p);

    SUBCASE("three generator terms, recomputed from scratch") {
        double down = p.down_rate() * (1.0 / (1.0 - theta) - 1.0);
        double up = -p.up_rate() * theta;
        // E (1-theta)^-Z by direct series summation
        double ez = 0;
        for (int j = 0; j < 4000; ++j) ez += loss_pmf(p.lambda, j) * std::pow(1.0 - theta, -j);
        double loss = ez - 1.0;
        CHECK(down == doctest::Approx(53.4653).epsilon(1e-4));
        CHECK(up == doctest::Approx(-73.6364).epsilon(1e-4));
        CHECK(loss == doctest::Approx(8.18182).epsilon(1e-4));
        double total = drift_of_h(p.level - 1, p);
        CHECK(total == doctest::Approx(down + up + loss).epsilon(1e-6));
        CHECK(total == doctest::Approx(-11.9892).epsilon(1e-4));
        // the loss term collapses to (delta lambda n) theta
        CHECK(loss == doctest::Approx(p.delta * p.lambda * double(p.n) * theta).epsilon(1e-9));
    }

    SUBCASE("negative across the admissible sweep") {
        for (double c : {0.5, 1.0, 2.0}) {
            for (double delta : {0.05, 0.1}) {
                for (int64_t n : {1000, 10000, 100000}) {
                    double lam = lambda_from_c(c, n);
                    if (delta * lam * lam * double(n) <= 1.0) continue;
                    StarChainParams q = make_star_chain_params(lam, n, delta);
                    for (int64_t x : {int64_t{1}, q.level / 2, q.level - 1})
                        CHECK(drift_of_h(x, q) < 0);
                }
            }
        }
    }

    SUBCASE("one-jump Monte Carlo stays below h(x)(1+1e-3)") {
        RngStream rng(103);
        const int N = 100000;
        const double total_rate = p.down_rate() + p.up_rate() + 1.0;
        double sum_ratio = 0;
        int64_t x = p.level - 1;
        for (int i = 0; i < N; ++i) {
            double u = rng.uniform() * total_rate;
            int64_t y;
            if (u < p.down_rate())
                y = x - 1;
            else if (u < p.down_rate() + p.up_rate())
                y = std::min(x + 1, p.level);
            else
                y = std::max<int64_t>(x - sample_loss(p.lambda, rng), 0);
            sum_ratio += std::pow(1.0 - theta, double(y - x));
        }
        CHECK(sum_ratio / N <= 1.0 + 1e-3);
    }
}

TEST_CASE("hitting bound") {
    CHECK(hitting_bound(1, 2, 3, 0.5) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    CHECK(hitting_bound(1, 3, 3, 0.5) == doctest::Approx(0.0));
    CHECK_THROWS_AS(hitting_bound(3, 2, 1, 0.5), Error);
    CHECK_THROWS_AS(hitting_bound(1, 2, 3, 1.5), Error);

    // the x = b-1 shortcut agrees once h(b-1) is negligible next to h(a-1)
    StarChainParams p = make_star_chain_params(0.1, 10000, 0.1);
    double theta = theta_of(p);
    for (double frac : {0.1, 0.2, 0.3}) {
        int64_t b = p.level;
        int64_t a = int64_t(std::ceil(frac * double(b)));
        double full = hitting_bound(a, b - 1, b, theta);
        double top = hitting_bound_top(a, b, theta);
        CHECK(full == doctest::Approx(top).epsilon(1e-12));
    }
}

TEST_CASE("reduced chain") {
    StarChainParams p = make_star_chain_params(0.1, 10000, 0.1);
    SUBCASE("zero horizon returns the start") {
        RngStream rng(107);
        ReducedStopSpec stop;
        stop.horizon = 0.0;
        ReducedRecord r = run_reduced_chain(p, 17, stop, rng);
        CHECK(r.final_x == 17);
        CHECK(r.reason == ChainStop::horizon);
        CHECK(r.elapsed == 0.0);
    }
    SUBCASE("inconsistent stop bounds rejected") {
        RngStream rng(109);
        ReducedStopSpec stop;
        stop.below_a = 10;
        stop.hit_b = 5;
        CHECK_THROWS_AS(run_reduced_chain(p, 7, stop, rng), Error);
    }
    SUBCASE("drop frequency from b-1 stays under the supermartingale bound") {
        double theta = theta_of(p);
        int64_t b = p.level;
        int64_t a = int64_t(std::ceil(0.2 * double(b)));
        double bound = hitting_bound(a, b - 1, b, theta);
        ReducedStopSpec stop;
        stop.below_a = a;
        stop.hit_b = b;
        RngStream rng(113);
        const int N = 100000;
        int64_t drops = 0;
        for (int i = 0; i < N; ++i)
            drops += run_reduced_chain(p, b - 1, stop, rng).reason == ChainStop::below_a;
        double freq = double(drops) / N;
        CHECK(freq <= bound + 3 * testutil::binom_se(freq, N));
    }
    SUBCASE("bound also holds where drops are actually observable") {
        StarChainParams q = make_star_chain_params(lambda_from_c(2.0, 1000), 1000, 0.1);
        double theta = theta_of(q);
        int64_t b = q.level;
        int64_t a = int64_t(std::ceil(0.2 * double(b)));
        double bound = hitting_bound(a, b - 1, b, theta);
        ReducedStopSpec stop;
        stop.below_a = a;
        stop.hit_b = b;
        RngStream rng(127);
        const int N = 100000;
        int64_t drops = 0;
        for (int i = 0; i < N; ++i)
            drops += run_reduced_chain(q, b - 1, stop, rng).reason == ChainStop::below_a;
        double freq = double(drops) / N;
        CHECK(freq <= bound + 3 * testutil::binom_se(freq, N));
    }
}

TEST_CASE("leaf occupancy curve") {
    CHECK(leaf_occupancy_curve(1e9, 1.0) == doctest::Approx(0.5));
    CHECK(leaf_occupancy_curve(0.0, 0.7) == 0.0);
    // monotone, and above lambda t / 2 for small t
    for (double lam : {0.1, 0.3, 1.0}) {
        double prev = -1;
        for (double t : {0.05, 0.1, 0.3, 0.6, 1.0}) {
            double v = leaf_occupancy_curve(t, lam);
            CHECK(v > prev);
            prev = v;
            if (t <= 1.5 / (1.0 + lam)) CHECK(v >= lam * t / 2.0);
        }
    }
    SUBCASE("two-state chain matches the closed form") {
        const double lam = 0.3, t = 0.5;
        RngStream rng(131);
        const int N = 200000;
        int occ = 0;
        for (int i = 0; i < N; ++i) {
            bool on = false;
            double clock = 0;
            while (true) {
                double rate = on ? 1.0 : lam;
                clock += rng.exponential(rate);
                if (clock > t) break;
                on = !on;
            }
            occ += on;
        }
        double freq = double(occ) / N;
        CHECK(std::abs(freq - leaf_occupancy_curve(t, lam)) <= 3 * testutil::binom_se(freq, N));
    }
}

TEST_CASE("ignition runs") {
    SUBCASE("lambda 0 dies at a unit exponential and never reaches K") {
        RngStream rng(137);
        std::vector<double> taus;
        for (int i = 0; i < 20000; ++i) {
            IgnitionRecord r = ignition_run(3, 0.0, 1, 1, rng);
            CHECK_FALSE(r.hit_k);
            CHECK(r.absorbed);
            taus.push_back(r.elapsed);
        }
        CHECK(std::abs(testutil::mean(taus) - 1.0) <= 3 * testutil::mean_se(taus));
    }
    SUBCASE("bad level order rejected") {
        RngStream rng(139);
        CHECK_THROWS_AS(ignition_run(10, 0.5, 8, 4, rng), Error);
    }
    SUBCASE("hit probabilities and times match the exact chain") {
        const int64_t n = 50;
        const double lam = 0.3;
        const int64_t K = 5, L = 10;
        auto hitK = star_hit_prob_before_extinction(n, lam, K);
        auto hitL = star_hit_prob_before_extinction(n, lam, L);
        auto mint = star_expected_min_time(n, lam, L);
        double pK = hitK[star_state_index(0, 1)];
        double pL = hitL[star_state_index(0, 1)];
        double eMin = mint[star_state_index(0, 1)];
        RngStream rng(149);
        const int N = 40000;
        int64_t k_hits = 0, l_hits = 0;
        std::vector<double> times;
        for (int i = 0; i < N; ++i) {
            IgnitionRecord r = ignition_run(n, lam, K, L, rng);
            k_hits += r.hit_k;
            l_hits += r.hit_l;
            times.push_back(r.elapsed);
        }
        double fK = double(k_hits) / N, fL = double(l_hits) / N;
        CHECK(std::abs(fK - pK) <= 3 * testutil::binom_se(fK, N));
        CHECK(std::abs(fL - pL) <= 3 * testutil::binom_se(fL, N));
        CHECK(std::abs(testutil::mean(times) - eMin) <= 3 * testutil::mean_se(times));
    }
}

TEST_CASE("reduced chain dominates from below at matched center time") {
    // Start both at L; the reduced chain's law should sit at or below the
    // star's occupied-leaf count when the star is sampled at equal elapsed
    // center-occupied time. One-sided two-sample KS at level 1e-3.
    const int64_t n = 10000;
    const double lam = lambda_from_c(1.0, n);
    const double delta = 0.1;
    StarChainParams p = make_star_chain_params(lam, n, delta);
    const double s = 2.0;  // center-occupied elapsed time
    const int N = 100000;

    std::vector<int64_t> reduced(N), star(N);
    {
        RngStream rng(151);
        ReducedStopSpec stop;
        stop.horizon = s;
        for (int i = 0; i < N; ++i) reduced[i] = run_reduced_chain(p, p.level, stop, rng).final_x;
    }
    {
        RngStream rng(157);
        for (int i = 0; i < N; ++i) {
            int64_t j = p.level;
            int c = 1;
            double busy = 0;  // accumulated center-occupied time
            while (busy < s && !(j == 0 && c == 0)) {
                double birth = c == 1 ? lam * double(n - j) : 0.0;
                double death = double(j);
                double flip = c == 1 ? 1.0 : lam * double(j);
                double total = birth + death + flip;
                double dt = rng.exponential(total);
                if (c == 1 && busy + dt >= s) {
                    busy = s;
                    break;
                }
                if (c == 1) busy += dt;
                double u = rng.uniform() * total;
                if (u < birth)
                    j += 1;
                else if (u < birth + death)
                    j -= 1;
                else
                    c = 1 - c;
            }
            star[i] = j;
        }
    }
    // max over v of F_star(v) - F_reduced(v) should not exceed the one-sided
    // two-sample threshold sqrt(log(1/alpha)/2) * sqrt(2/N).
    std::map<int64_t, int64_t> cr, cs;
    for (int64_t v : reduced) cr[v]++;
    for (int64_t v : star) cs[v]++;
    double fr = 0, fst = 0, worst = -1;
    int64_t hi = std::max(cr.rbegin()->first, cs.rbegin()->first);
    for (int64_t v = 0; v <= hi; ++v) {
        if (cr.count(v)) fr += double(cr[v]) / N;
        if (cs.count(v)) fst += double(cs[v]) / N;
        worst = std::max(worst, fst - fr);
    }
    double threshold = std::sqrt(std::log(1.0 / 1e-3) / 2.0) * std::sqrt(2.0 / double(N));
    CHECK(worst <= threshold);
}
