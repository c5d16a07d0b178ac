#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "topology.hpp"

namespace cps {

// Exact small-state-space solves. All systems are verified by substituting
// the solution back; relative residuals above 1e-10 raise.

// Star states are (j occupied leaves, center bit c), indexed 2j + c.
inline int64_t star_state_index(int64_t j, int c) { return 2 * j + c; }

// E[time to reach (0,0)] for every state.
std::vector<double> star_expected_extinction(int64_t n, double lambda);

// P(j reaches K before absorption at (0,0)) for every state; 1 at j >= K.
std::vector<double> star_hit_prob_before_extinction(int64_t n, double lambda, int64_t K);

// E[min(T_{0,0}, T_L)] for every state; 0 at j >= L and at (0,0).
std::vector<double> star_expected_min_time(int64_t n, double lambda, int64_t L);

// Stationary per-vertex occupancy of the process with `pins` permanently
// occupied. At most 14 free vertices.
std::vector<double> small_graph_stationary(const Graph& g, double lambda,
                                           const std::vector<int32_t>& pins);

// Exact expected extinction time from `init` occupied; no pins allowed.
double small_graph_extinction_time(const Graph& g, double lambda,
                                   const std::vector<int32_t>& init);

// Exact E[ integral of 1{target occupied} until extinction ] from `init`.
double small_graph_occupation_time(const Graph& g, double lambda,
                                   const std::vector<int32_t>& init, int32_t target);

struct WalkCensus {
    std::vector<std::pair<int, uint64_t>> by_length;  // (length, walk count), counts > 0
    double weighted_sum = 0;                          // sum counts * (lambda/(1+lambda))^length
};

// Walk census from -> to, revisits allowed, lengths up to max_len.
WalkCensus enumerate_dual_paths(const Graph& g, int32_t from, int32_t to, int max_len,
                                double lambda, int64_t cap = 10'000'000);

}  // namespace cps
