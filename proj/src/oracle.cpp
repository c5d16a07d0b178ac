#include "oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "errors.hpp"

namespace cps {

namespace {

constexpr double kResidualTol = 1e-10;

using Triplet = Eigen::Triplet<double>;

// Solve A x = b with a direct method and verify the residual. Dense
// elimination below 2^10 unknowns, sparse LU above.
Eigen::VectorXd solve_checked(int64_t dim, const std::vector<Triplet>& entries,
                              const Eigen::VectorXd& b) {
    Eigen::VectorXd x;
    Eigen::SparseMatrix<double> a(dim, dim);
    a.setFromTriplets(entries.begin(), entries.end());
    if (dim < 1024) {
        Eigen::MatrixXd dense(a);
        x = Eigen::PartialPivLU<Eigen::MatrixXd>(dense).solve(b);
    } else {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success) internal_error("oracle: sparse factorization failed");
        x = lu.solve(b);
    }
    double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    scale = std::max(scale, x.cwiseAbs().maxCoeff());
    double res = (a * x - b).cwiseAbs().maxCoeff();
    if (!(res <= kResidualTol * scale))
        internal_error("oracle: residual " + std::to_string(res) + " above tolerance");
    return x;
}

// Star-chain transitions out of (j,c); absorbing (0,0) has none.
template <typename Fn>
void star_transitions(int64_t n, double lambda, int64_t j, int c, Fn&& emit) {
    if (j == 0 && c == 0) return;
    if (c == 1) {
        if (j < n) emit(j + 1, 1, lambda * static_cast<double>(n - j));
        if (j > 0) emit(j - 1, 1, static_cast<double>(j));
        emit(j, 0, 1.0);
    } else {
        if (j > 0) emit(j - 1, 0, static_cast<double>(j));
        if (j > 0) emit(j, 1, lambda * static_cast<double>(j));
    }
}

void check_star_inputs(int64_t n, double lambda) {
    if (n < 1 || n > 1'000'000) spec_error("star oracle: need 1 <= n <= 1e6");
    if (lambda < 0) spec_error("star oracle: lambda must be >= 0");
}

}  // namespace

std::vector<double> star_expected_extinction(int64_t n, double lambda) {
    check_star_inputs(n, lambda);
    const int64_t states = 2 * (n + 1);
    // Unknowns: all states except the absorbing (0,0). Row s:
    // sum_t q(s,t) u(t) - rate_total(s) u(s) = -1.
    auto unknown = [&](int64_t idx) { return idx - 1; };  // (0,0) is index 0
    const int64_t dim = states - 1;
    std::vector<Triplet> tr;
    tr.reserve(static_cast<size_t>(dim) * 4);
    Eigen::VectorXd rhs(dim);
    for (int64_t j = 0; j <= n; ++j) {
        for (int c = 0; c <= 1; ++c) {
            int64_t s = star_state_index(j, c);
            if (s == 0) continue;
            double total = 0;
            star_transitions(n, lambda, j, c, [&](int64_t j2, int c2, double rate) {
                total += rate;
                int64_t t = star_state_index(j2, c2);
                if (t != 0) tr.emplace_back(unknown(s), unknown(t), rate);
            });
            if (total <= 0) internal_error("star oracle: state with no exit rate");
            tr.emplace_back(unknown(s), unknown(s), -total);
            rhs(unknown(s)) = -1.0;
        }
    }
    Eigen::VectorXd u = solve_checked(dim, tr, rhs);
    std::vector<double> out(states, 0.0);
    for (int64_t s = 1; s < states; ++s) out[s] = u(unknown(s));
    return out;
}

std::vector<double> star_hit_prob_before_extinction(int64_t n, double lambda, int64_t K) {
    check_star_inputs(n, lambda);
    if (K < 1 || K > n) spec_error("star oracle: need 1 <= K <= n");
    const int64_t states = 2 * (n + 1);
    // Harmonic h with h=1 on {j = K}, h=0 at (0,0); interior j < K.
    std::vector<int64_t> unknown_of(states, -1);
    int64_t dim = 0;
    for (int64_t j = 0; j < K; ++j)
        for (int c = 0; c <= 1; ++c) {
            int64_t s = star_state_index(j, c);
            if (s == 0) continue;
            unknown_of[s] = dim++;
        }
    std::vector<Triplet> tr;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    for (int64_t j = 0; j < K; ++j) {
        for (int c = 0; c <= 1; ++c) {
            int64_t s = star_state_index(j, c);
            if (s == 0) continue;
            int64_t row = unknown_of[s];
            double total = 0;
            star_transitions(n, lambda, j, c, [&](int64_t j2, int c2, double rate) {
                total += rate;
                if (j2 >= K) {
                    rhs(row) -= rate;  // boundary value 1
                } else {
                    int64_t t = star_state_index(j2, c2);
                    if (t != 0) tr.emplace_back(row, unknown_of[t], rate);
                }
            });
            tr.emplace_back(row, row, -total);
        }
    }
    Eigen::VectorXd h = solve_checked(dim, tr, rhs);
    std::vector<double> out(states, 1.0);
    out[0] = 0.0;
    for (int64_t s = 1; s < states; ++s)
        if (unknown_of[s] >= 0) out[s] = h(unknown_of[s]);
    return out;
}

std::vector<double> star_expected_min_time(int64_t n, double lambda, int64_t L) {
    check_star_inputs(n, lambda);
    if (L < 1 || L > n) spec_error("star oracle: need 1 <= L <= n");
    const int64_t states = 2 * (n + 1);
    std::vector<int64_t> unknown_of(states, -1);
    int64_t dim = 0;
    for (int64_t j = 0; j < L; ++j)
        for (int c = 0; c <= 1; ++c) {
            int64_t s = star_state_index(j, c);
            if (s == 0) continue;
            unknown_of[s] = dim++;
        }
    std::vector<Triplet> tr;
    Eigen::VectorXd rhs(dim);
    for (int64_t j = 0; j < L; ++j) {
        for (int c = 0; c <= 1; ++c) {
            int64_t s = star_state_index(j, c);
            if (s == 0) continue;
            int64_t row = unknown_of[s];
            rhs(row) = -1.0;
            double total = 0;
            star_transitions(n, lambda, j, c, [&](int64_t j2, int c2, double rate) {
                total += rate;
                int64_t t = star_state_index(j2, c2);
                if (t != 0 && j2 < L) tr.emplace_back(row, unknown_of[t], rate);
            });
            tr.emplace_back(row, row, -total);
        }
    }
    Eigen::VectorXd u = solve_checked(dim, tr, rhs);
    std::vector<double> out(states, 0.0);
    for (int64_t s = 1; s < states; ++s)
        if (unknown_of[s] >= 0) out[s] = u(unknown_of[s]);
    return out;
}

namespace {

struct FreeIndex {
    std::vector<int32_t> free_ids;       // free vertex -> graph vertex
    std::vector<int32_t> slot_of;        // graph vertex -> free slot or -1
    std::vector<uint8_t> pinned_mask;    // by graph vertex
};

FreeIndex index_free_vertices(const Graph& g, const std::vector<int32_t>& pins, int max_free) {
    FreeIndex fi;
    fi.slot_of.assign(g.vertex_count(), -1);
    fi.pinned_mask.assign(g.vertex_count(), 0);
    for (int32_t v : pins) {
        if (v < 0 || v >= g.vertex_count()) spec_error("oracle: pin out of range");
        fi.pinned_mask[v] = 1;
    }
    for (int32_t v = 0; v < g.vertex_count(); ++v) {
        if (fi.pinned_mask[v]) continue;
        fi.slot_of[v] = static_cast<int32_t>(fi.free_ids.size());
        fi.free_ids.push_back(v);
    }
    if (static_cast<int>(fi.free_ids.size()) > max_free)
        spec_error("oracle: " + std::to_string(fi.free_ids.size()) +
                   " free vertices exceed the exact-solve limit of " + std::to_string(max_free));
    return fi;
}

// Occupied-neighbor count of free vertex `slot` in state S (pins always count).
int occupied_neighbors(const Graph& g, const FreeIndex& fi, uint32_t state, int32_t v) {
    int cnt = 0;
    for (int32_t u : g.neighbors(v)) {
        if (fi.pinned_mask[u])
            ++cnt;
        else if (state >> fi.slot_of[u] & 1u)
            ++cnt;
    }
    return cnt;
}

}  // namespace

std::vector<double> small_graph_stationary(const Graph& g, double lambda,
                                           const std::vector<int32_t>& pins) {
    if (lambda <= 0) spec_error("stationary oracle: lambda must be > 0");
    if (pins.empty())
        spec_error("stationary oracle: without pins the only stationary law is extinction");
    FreeIndex fi = index_free_vertices(g, pins, 14);
    const int f = static_cast<int>(fi.free_ids.size());
    const int64_t states = int64_t{1} << f;

    // pi Q = 0 with sum(pi) = 1: solve Q^T pi = 0, replacing the last row by
    // the normalization.
    std::vector<Triplet> tr;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(states);
    std::vector<double> diag(states, 0.0);
    for (int64_t s = 0; s < states; ++s) {
        for (int i = 0; i < f; ++i) {
            int32_t v = fi.free_ids[i];
            double rate;
            int64_t t;
            if (s >> i & 1) {
                rate = 1.0;  // death
                t = s & ~(int64_t{1} << i);
            } else {
                rate = lambda * occupied_neighbors(g, fi, static_cast<uint32_t>(s), v);
                t = s | (int64_t{1} << i);
            }
            if (rate <= 0) continue;
            diag[s] -= rate;
            // Q^T entry (row t, column s); the last row is the normalization.
            if (t < states - 1) tr.emplace_back(t, s, rate);
        }
    }
    for (int64_t s = 0; s < states - 1; ++s) tr.emplace_back(s, s, diag[s]);
    for (int64_t s = 0; s < states; ++s) tr.emplace_back(states - 1, s, 1.0);
    rhs(states - 1) = 1.0;
    Eigen::VectorXd pi = solve_checked(states, tr, rhs);

    std::vector<double> marginal(g.vertex_count(), 0.0);
    for (int32_t v = 0; v < g.vertex_count(); ++v)
        if (fi.pinned_mask[v]) marginal[v] = 1.0;
    for (int64_t s = 0; s < states; ++s)
        for (int i = 0; i < f; ++i)
            if (s >> i & 1) marginal[fi.free_ids[i]] += pi(s);
    return marginal;
}

namespace {

// Expected value of `reward` integrated until extinction, from each state of
// the no-pins chain. reward(state) >= 0.
Eigen::VectorXd absorbing_expectation(const Graph& g, double lambda,
                                      const std::vector<double>& reward) {
    FreeIndex fi = index_free_vertices(g, {}, 14);
    const int f = static_cast<int>(fi.free_ids.size());
    const int64_t states = int64_t{1} << f;
    // Unknowns: non-empty states, absorbing empty set.
    const int64_t dim = states - 1;
    std::vector<Triplet> tr;
    Eigen::VectorXd rhs(dim);
    for (int64_t s = 1; s < states; ++s) {
        int64_t row = s - 1;
        rhs(row) = -reward[s];
        double total = 0;
        for (int i = 0; i < f; ++i) {
            int32_t v = fi.free_ids[i];
            double rate;
            int64_t t;
            if (s >> i & 1) {
                rate = 1.0;
                t = s & ~(int64_t{1} << i);
            } else {
                rate = lambda * occupied_neighbors(g, fi, static_cast<uint32_t>(s), v);
                t = s | (int64_t{1} << i);
            }
            if (rate <= 0) continue;
            total += rate;
            if (t != 0) tr.emplace_back(row, t - 1, rate);
        }
        tr.emplace_back(row, row, -total);
    }
    return solve_checked(dim, tr, rhs);
}

int64_t state_of(const Graph& g, const std::vector<int32_t>& init) {
    int64_t s = 0;
    for (int32_t v : init) {
        if (v < 0 || v >= g.vertex_count()) spec_error("oracle: init vertex out of range");
        s |= int64_t{1} << v;
    }
    return s;
}

}  // namespace

double small_graph_extinction_time(const Graph& g, double lambda,
                                   const std::vector<int32_t>& init) {
    if (lambda < 0) spec_error("extinction oracle: lambda must be >= 0");
    if (g.vertex_count() > 14) spec_error("extinction oracle: at most 14 vertices");
    int64_t s0 = state_of(g, init);
    if (s0 == 0) return 0.0;
    std::vector<double> reward(int64_t{1} << g.vertex_count(), 1.0);
    Eigen::VectorXd u = absorbing_expectation(g, lambda, reward);
    return u(s0 - 1);
}

double small_graph_occupation_time(const Graph& g, double lambda,
                                   const std::vector<int32_t>& init, int32_t target) {
    if (lambda < 0) spec_error("occupation oracle: lambda must be >= 0");
    if (g.vertex_count() > 14) spec_error("occupation oracle: at most 14 vertices");
    if (target < 0 || target >= g.vertex_count()) spec_error("occupation oracle: bad target");
    int64_t s0 = state_of(g, init);
    if (s0 == 0) return 0.0;
    const int64_t states = int64_t{1} << g.vertex_count();
    std::vector<double> reward(states, 0.0);
    for (int64_t s = 0; s < states; ++s)
        if (s >> target & 1) reward[s] = 1.0;
    Eigen::VectorXd u = absorbing_expectation(g, lambda, reward);
    return u(s0 - 1);
}

WalkCensus enumerate_dual_paths(const Graph& g, int32_t from, int32_t to, int max_len,
                                double lambda, int64_t cap) {
    if (from < 0 || from >= g.vertex_count() || to < 0 || to >= g.vertex_count())
        spec_error("walk census: vertex out of range");
    if (max_len < 0) spec_error("walk census: max_len must be >= 0");
    const int64_t V = g.vertex_count();
    std::vector<uint64_t> cur(V, 0), next(V, 0);
    cur[from] = 1;
    WalkCensus census;
    double step_weight = lambda / (1.0 + lambda);
    int64_t total = 0;
    auto record = [&](int len, uint64_t count) {
        if (count == 0) return;
        total += static_cast<int64_t>(count);
        if (total > cap) resource_error("walk census: more than " + std::to_string(cap) + " walks");
        census.by_length.emplace_back(len, count);
        census.weighted_sum += static_cast<double>(count) * std::pow(step_weight, len);
    };
    record(0, cur[to]);
    for (int len = 1; len <= max_len; ++len) {
        std::fill(next.begin(), next.end(), 0);
        bool any = false;
        for (int64_t v = 0; v < V; ++v) {
            if (!cur[v]) continue;
            for (int32_t u : g.neighbors(static_cast<int32_t>(v))) {
                uint64_t before = next[u];
                next[u] += cur[v];
                if (next[u] < before) resource_error("walk census: count overflow");
                any = true;
            }
        }
        cur.swap(next);
        record(len, cur[to]);
        if (!any) break;
    }
    return census;
}

}  // namespace cps
