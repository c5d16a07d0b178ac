#include "starchain.hpp"

#include <cmath>

#include "errors.hpp"

namespace cps {

double lambda_from_c(double c, int64_t n) {
    if (n < 2) spec_error("lambda_from_c: n must be >= 2");
    if (c <= 0) spec_error("lambda_from_c: c must be > 0");
    return std::sqrt(c * std::log(static_cast<double>(n)) / static_cast<double>(n));
}

StarChainParams make_star_chain_params(double lambda, int64_t n, double delta) {
    if (lambda <= 0) spec_error("star chain: lambda must be > 0");
    if (n < 1) spec_error("star chain: n must be >= 1");
    if (delta <= 0 || delta >= 0.25) spec_error("star chain: delta must be in (0, 1/4)");
    StarChainParams p;
    p.lambda = lambda;
    p.n = n;
    p.delta = delta;
    p.level = static_cast<int64_t>(std::floor((1.0 - 4.0 * delta) * lambda * static_cast<double>(n)));
    if (p.level < 1)
        spec_error("star chain: L = floor((1-4*delta)*lambda*n) must be >= 1, got " +
                   std::to_string(p.level));
    return p;
}

int64_t sample_loss(double lambda, RngStream& rng) {
    if (lambda <= 0) spec_error("loss sample: lambda must be > 0 (Z diverges at 0)");
    // Inversion: P(Z >= j) = (1/(1+lambda))^j.
    double u = rng.uniform();
    double lq = -std::log1p(lambda);  // log(1/(1+lambda))
    return static_cast<int64_t>(std::floor(std::log(u) / lq));
}

double loss_pmf(double lambda, int64_t j) {
    if (lambda <= 0) spec_error("loss pmf: lambda must be > 0");
    if (j < 0) return 0;
    double q = 1.0 / (1.0 + lambda);
    return std::pow(q, static_cast<double>(j)) * lambda * q;
}

double theta_of(const StarChainParams& p) {
    double reg = p.delta * p.lambda * p.lambda * static_cast<double>(p.n);
    if (reg <= 1.0)
        spec_error("theta: requires delta*lambda^2*n > 1, got " + std::to_string(reg));
    return (p.lambda - 1.0 / (p.delta * p.lambda * static_cast<double>(p.n))) / (p.lambda + 1.0);
}

double drift_of_h(int64_t x, const StarChainParams& p) {
    if (x < 1 || x >= p.level) spec_error("drift: need 1 <= x < L");
    double theta = theta_of(p);
    double conv = (1.0 + p.lambda) * (1.0 - theta);
    if (conv <= 1.0)
        spec_error("drift: geometric series needs (1+lambda)*(1-theta) > 1, got " +
                   std::to_string(conv));
    double down_term = p.down_rate() * (1.0 / (1.0 - theta) - 1.0);
    double up_term = -p.up_rate() * theta;
    double mean_z_factor = p.lambda * (1.0 - theta) / (p.lambda - theta - theta * p.lambda);
    double loss_term = mean_z_factor - 1.0;
    return down_term + up_term + loss_term;
}

double hitting_bound(int64_t a, int64_t x, int64_t b, double theta) {
    if (!(a < x && x <= b)) spec_error("hitting bound: need a < x <= b");
    if (!(theta > 0 && theta < 1)) spec_error("hitting bound: need theta in (0,1)");
    auto h = [&](int64_t v) { return std::pow(1.0 - theta, static_cast<double>(v)); };
    return (h(x) - h(b)) / (h(a - 1) - h(b));
}

double hitting_bound_top(int64_t a, int64_t b, double theta) {
    if (!(a < b)) spec_error("hitting bound: need a < b");
    if (!(theta > 0 && theta < 1)) spec_error("hitting bound: need theta in (0,1)");
    double r = std::pow(1.0 - theta, static_cast<double>(b - a));  // h(b-1)/h(a-1)
    return theta * r / (1.0 - r);
}

double leaf_occupancy_curve(double t, double lambda) {
    if (t < 0) spec_error("leaf occupancy: t must be >= 0");
    if (lambda < 0) spec_error("leaf occupancy: lambda must be >= 0");
    if (lambda == 0) return 0;
    return lambda * (1.0 - std::exp(-(lambda + 1.0) * t)) / (lambda + 1.0);
}

ReducedRecord run_reduced_chain(const StarChainParams& p, int64_t x0, const ReducedStopSpec& stop,
                                RngStream& rng) {
    if (x0 < 0 || x0 > p.level) spec_error("reduced chain: need 0 <= x0 <= L");
    if (stop.below_a >= 0 && stop.hit_b >= 0 && stop.below_a >= stop.hit_b)
        spec_error("reduced chain: stop bounds need a < b");
    const double rate_down = p.down_rate();
    const double rate_up = p.up_rate();
    const double total = rate_down + rate_up + 1.0;

    int64_t x = x0;
    double t = 0;
    ReducedRecord rec;
    auto stopped = [&]() {
        if (stop.below_a >= 0 && x < stop.below_a) {
            rec.reason = ChainStop::below_a;
            return true;
        }
        if (stop.hit_b >= 0 && x == stop.hit_b) {
            rec.reason = ChainStop::hit_b;
            return true;
        }
        return false;
    };
    if (stopped()) {
        rec.elapsed = 0;
        rec.final_x = x;
        return rec;
    }
    while (true) {
        double dt = rng.exponential(total);
        if (t + dt > stop.horizon) {
            rec.reason = ChainStop::horizon;
            t = stop.horizon;
            break;
        }
        t += dt;
        double u = rng.uniform() * total;
        if (u < rate_down) {
            x -= 1;
        } else if (u < rate_down + rate_up) {
            x = std::min(x + 1, p.level);
        } else {
            x = std::max<int64_t>(x - sample_loss(p.lambda, rng), 0);
        }
        if (stopped()) break;
        if (x == 0) {  // absorbing; no stop bound can fire from here
            rec.reason = ChainStop::absorbed;
            break;
        }
    }
    rec.elapsed = t;
    rec.final_x = x;
    return rec;
}

IgnitionRecord ignition_run(int64_t n, double lambda, int64_t K, int64_t L, RngStream& rng,
                            double horizon, int64_t j0, int c0) {
    if (n < 1) spec_error("ignition: n must be >= 1");
    if (lambda < 0) spec_error("ignition: lambda must be >= 0");
    if (!(0 < K && K <= L && L <= n)) spec_error("ignition: need 0 < K <= L <= n");
    if (j0 < 0 || j0 > n || (c0 != 0 && c0 != 1)) spec_error("ignition: bad start state");

    int64_t j = j0;
    int c = c0;
    double t = 0;
    IgnitionRecord rec;
    auto note = [&]() {
        if (j >= K && rec.t_k < 0) {
            rec.t_k = t;
            rec.hit_k = true;
        }
    };
    note();
    while (true) {
        if (j == 0 && c == 0) {
            rec.absorbed = true;
            break;
        }
        if (j >= L) {
            rec.hit_l = true;
            break;
        }
        double birth = c == 1 ? lambda * static_cast<double>(n - j) : 0.0;
        double leaf_death = static_cast<double>(j);
        double center_flip = c == 1 ? 1.0 : lambda * static_cast<double>(j);
        double total = birth + leaf_death + center_flip;
        if (total <= 0) {  // lambda = 0 with center vacant and no leaves can't happen; guard anyway
            rec.censored = true;
            t = horizon;
            break;
        }
        double dt = rng.exponential(total);
        if (t + dt > horizon) {
            rec.censored = true;
            t = horizon;
            break;
        }
        t += dt;
        double u = rng.uniform() * total;
        if (u < birth)
            j += 1;
        else if (u < birth + leaf_death)
            j -= 1;
        else
            c = 1 - c;
        note();
    }
    rec.elapsed = t;
    return rec;
}

}  // namespace cps
