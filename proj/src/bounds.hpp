#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cps {

// Named evaluation result: echoed inputs, one or more output values, and
// validity flags for regime conditions (series convergence and the like).
struct BoundReport {
    std::string name;
    std::vector<std::pair<std::string, double>> inputs;
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::pair<std::string, bool>> flags;

    bool valid() const;
    double value(const std::string& key) const;
    void put(const std::string& key, double v) { values.emplace_back(key, v); }
    void flag(const std::string& key, bool v) { flags.emplace_back(key, v); }
    std::string to_json() const;
    std::string to_csv() const;  // single row, '|'-separated key=value groups
};

// Weighted walk series sum_{m<=m_max} C(i+2m,m) lambda^(i+2m) d^m together
// with the closed majorant lambda^i * (1 + 2^i q/(1-q)), q = 4 lambda^2 d,
// and a geometric tail bound for the truncation.
BoundReport dual_path_bound(int i, double lambda, double d, int m_max);

// (1+eta) * lambda^i
BoundReport equilibrium_occupancy_bound(int i, double lambda, double eta);

// d^k * exp(-t/2), plus the hold-time constant M = 4k log n.
BoundReport subtree_extinction_bound(double t, double d, int k, int64_t n);

// sum over occupied levels of theta^level
double level_weight(const std::vector<int32_t>& levels, double theta);

// upper = C0 * log(n) * exp((1+eps) lambda^2 n), lower = exp((1-eta) lambda^2 n)/(lambda^2 n)
BoundReport survival_bracket(int64_t n, double lambda, double eps, double eta, double c0);

// b = log(a1...ak)/log(n), c_k = (k-b)/2, scale = sqrt(c_k log n / n)
BoundReport critical_constant(int k, const std::vector<int64_t>& degrees, int64_t n);

// exact = (e^-1 (1-e^-lambda) e^-1)^(k+1); small-lambda form C1 lambda^(k+1),
// C1 = (1/(2 e^2))^(k+1)
BoundReport push_probability_lower(double lambda, int k);

// first-moment bound (2 sqrt(N) p)^(2m); overlap table term_k = (N p^2)^(2m-k);
// second-moment partial sum and the ratio (EN)^2 / EN^2
BoundReport return_path_moments(int m, double big_n, double p);

// t0 = 2/((1-4 delta) eta), cycle t1 = t0+2, attempts = n^c/t1,
// all-fail = (1 - C1 lambda^2)^attempts with lambda = sqrt(c log n / n), k = 1
BoundReport relay_schedule(double delta, double eta, int64_t n, double c);

// Dispatch by name with key=value inputs (CLI surface).
BoundReport bounds_eval(const std::string& name, const std::map<std::string, double>& kv);
std::vector<std::string> bounds_names();

}  // namespace cps
