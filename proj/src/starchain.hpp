#pragma once

#include <cstdint>
#include <limits>

#include "rng.hpp"

namespace cps {

// lambda = sqrt(c * log(n) / n)
double lambda_from_c(double c, int64_t n);

struct StarChainParams {
    double lambda = 0;
    int64_t n = 0;
    double delta = 0;   // margin in (0, 1/4)
    int64_t level = 0;  // L = floor((1-4*delta)*lambda*n)

    double up_rate() const { return (1.0 - delta) * lambda * static_cast<double>(n); }
    double down_rate() const { return static_cast<double>(level); }
};

StarChainParams make_star_chain_params(double lambda, int64_t n, double delta);

// Leaves lost while the center is vacant: P(Z=j) = (1/(1+lambda))^j * lambda/(1+lambda).
int64_t sample_loss(double lambda, RngStream& rng);
double loss_pmf(double lambda, int64_t j);

// theta = (lambda - 1/(delta*lambda*n)) / (1+lambda); requires delta*lambda^2*n > 1.
double theta_of(const StarChainParams& p);

// Expected generator action on h(x) = (1-theta)^x, per unit h, for 1 <= x < L.
// Negative throughout the valid regime.
double drift_of_h(int64_t x, const StarChainParams& p);

// P_x(drop below a before reaching b) <= (h(x)-h(b)) / (h(a-1)-h(b)).
double hitting_bound(int64_t a, int64_t x, int64_t b, double theta);

// Specialization at x = b-1: theta*r/(1-r) with r = h(b-1)/h(a-1).
double hitting_bound_top(int64_t a, int64_t b, double theta);

// Occupancy of one leaf at time t with the center held occupied throughout:
// p0(t) = lambda*(1 - exp(-(lambda+1)t)) / (lambda+1).
double leaf_occupancy_curve(double t, double lambda);

enum class ChainStop { below_a, hit_b, horizon, absorbed };

struct ReducedRecord {
    ChainStop reason = ChainStop::horizon;
    double elapsed = 0;
    int64_t final_x = 0;
};

struct ReducedStopSpec {
    int64_t below_a = -1;  // stop when x < below_a (-1: disabled)
    int64_t hit_b = -1;    // stop when x == hit_b (-1: disabled)
    double horizon = std::numeric_limits<double>::infinity();
};

// Jump chain: x -> x-1 at rate L, x -> min(x+1, L) at rate (1-delta)*lambda*n,
// x -> max(x-Z, 0) at rate 1. State 0 is absorbing.
ReducedRecord run_reduced_chain(const StarChainParams& p, int64_t x0, const ReducedStopSpec& stop,
                                RngStream& rng);

struct IgnitionRecord {
    bool hit_k = false;
    bool hit_l = false;
    bool absorbed = false;  // reached (0,0)
    bool censored = false;
    double elapsed = 0;     // min of absorption and L-hit times (or horizon)
    double t_k = -1;        // first time at K occupied leaves, -1 if never
};

// Full two-coordinate star dynamics (j occupied leaves, center bit), started
// from (j0, c0), run until j = L or absorption at (0,0). Elapsed time includes
// vacant-center periods.
IgnitionRecord ignition_run(int64_t n, double lambda, int64_t K, int64_t L, RngStream& rng,
                            double horizon = std::numeric_limits<double>::infinity(),
                            int64_t j0 = 0, int c0 = 1);

}  // namespace cps
