#include "bounds.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"

#include <json.hpp>

namespace cps {

bool BoundReport::valid() const {
    for (const auto& [k, v] : flags)
        if (!v) return false;
    return true;
}

double BoundReport::value(const std::string& key) const {
    for (const auto& [k, v] : values)
        if (k == key) return v;
    internal_error("bound report '" + name + "' has no value '" + key + "'");
}

std::string BoundReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    for (const auto& [k, v] : inputs) j["inputs"][k] = v;
    for (const auto& [k, v] : values) j["values"][k] = v;
    for (const auto& [k, v] : flags) j["flags"][k] = v;
    j["valid"] = valid();
    return j.dump();
}

std::string BoundReport::to_csv() const {
    std::ostringstream os;
    os << name;
    char buf[64];
    for (const auto& [k, v] : inputs) {
        snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << k << '=' << buf;
    }
    for (const auto& [k, v] : values) {
        snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << k << '=' << buf;
    }
    for (const auto& [k, v] : flags) os << ',' << k << '=' << (v ? 1 : 0);
    return os.str();
}

namespace {

double binomial_coeff(int n, int k) {
    // exact for the ranges used here (n up to a few hundred): products in double
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

BoundReport dual_path_bound(int i, double lambda, double d, int m_max) {
    if (i < 0) spec_error("dual_path_bound: i must be >= 0");
    if (lambda < 0 || d < 0 || m_max < 0) spec_error("dual_path_bound: bad inputs");
    BoundReport r;
    r.name = "dual_path_bound";
    r.inputs = {{"i", i}, {"lambda", lambda}, {"d", d}, {"m_max", m_max}};
    double q = 4.0 * lambda * lambda * d;
    double partial = 0;
    for (int m = 0; m <= m_max; ++m)
        partial += binomial_coeff(i + 2 * m, m) * std::pow(lambda, i + 2 * m) * std::pow(d, m);
    r.put("partial_sum", partial);
    r.put("q", q);
    bool converges = q < 1.0;
    if (converges) {
        double closed = std::pow(lambda, i) * (1.0 + std::pow(2.0, i) * q / (1.0 - q));
        r.put("closed_bound", closed);
        // Terms are majorized by lambda^i 2^i q^m, so the truncation error is
        // geometric from m_max+1 on.
        r.put("tail_bound",
              std::pow(lambda, i) * std::pow(2.0, i) * std::pow(q, m_max + 1) / (1.0 - q));
    }
    r.flag("series_converges", converges);
    return r;
}

BoundReport equilibrium_occupancy_bound(int i, double lambda, double eta) {
    if (i < 1) spec_error("equilibrium_occupancy_bound: i must be >= 1");
    if (eta < 0) spec_error("equilibrium_occupancy_bound: eta must be >= 0");
    BoundReport r;
    r.name = "equilibrium_occupancy_bound";
    r.inputs = {{"i", i}, {"lambda", lambda}, {"eta", eta}};
    r.put("bound", (1.0 + eta) * std::pow(lambda, i));
    return r;
}

BoundReport subtree_extinction_bound(double t, double d, int k, int64_t n) {
    if (t < 0) spec_error("subtree_extinction_bound: t must be >= 0");
    BoundReport r;
    r.name = "subtree_extinction_bound";
    r.inputs = {{"t", t}, {"d", d}, {"k", k}, {"n", static_cast<double>(n)}};
    r.put("bound", std::pow(d, k) * std::exp(-t / 2.0));
    r.put("hold_time", 4.0 * k * std::log(static_cast<double>(n)));
    return r;
}

double level_weight(const std::vector<int32_t>& levels, double theta) {
    if (theta <= 0) spec_error("level_weight: theta must be > 0");
    double w = 0;
    for (int32_t l : levels) w += std::pow(theta, l);
    return w;
}

BoundReport survival_bracket(int64_t n, double lambda, double eps, double eta, double c0) {
    if (n < 2) spec_error("survival_bracket: n must be >= 2");
    if (lambda < 0) spec_error("survival_bracket: lambda must be >= 0");
    BoundReport r;
    r.name = "survival_bracket";
    r.inputs = {{"n", static_cast<double>(n)}, {"lambda", lambda}, {"eps", eps},
                {"eta", eta},                  {"c0", c0}};
    double l2n = lambda * lambda * static_cast<double>(n);
    r.put("lambda2n", l2n);
    bool finite = l2n > 0;
    double upper = c0 * std::log(static_cast<double>(n)) * std::exp((1.0 + eps) * l2n);
    double lower = finite ? std::exp((1.0 - eta) * l2n) / l2n
                          : std::numeric_limits<double>::infinity();
    r.put("upper", upper);
    r.put("lower", lower);
    r.flag("lower_finite", finite);
    r.flag("usable", finite && lower < upper);
    return r;
}

BoundReport critical_constant(int k, const std::vector<int64_t>& degrees, int64_t n) {
    if (n < 2) spec_error("critical_constant: n must be >= 2");
    if (static_cast<int>(degrees.size()) != k)
        spec_error("critical_constant: k must match the degree count");
    BoundReport r;
    r.name = "critical_constant";
    r.inputs = {{"k", k}, {"n", static_cast<double>(n)}};
    double log_prod = 0;
    for (int64_t a : degrees) {
        if (a < 1) spec_error("critical_constant: degrees must be >= 1");
        log_prod += std::log(static_cast<double>(a));
    }
    double b = log_prod / std::log(static_cast<double>(n));
    double ck = (k - b) / 2.0;
    r.put("b", b);
    r.put("c_k", ck);
    r.put("scale", ck > 0 ? std::sqrt(ck * std::log(static_cast<double>(n)) / static_cast<double>(n))
                          : 0.0);
    r.flag("positive_c", ck > 0);
    return r;
}

BoundReport push_probability_lower(double lambda, int k) {
    if (lambda <= 0) spec_error("push_probability_lower: lambda must be > 0");
    if (k < 0) spec_error("push_probability_lower: k must be >= 0");
    BoundReport r;
    r.name = "push_probability_lower";
    r.inputs = {{"lambda", lambda}, {"k", k}};
    double per_step = std::exp(-2.0) * (1.0 - std::exp(-lambda));
    double c1 = std::pow(1.0 / (2.0 * std::exp(2.0)), k + 1);
    r.put("exact", std::pow(per_step, k + 1));
    r.put("c1", c1);
    r.put("small_lambda_form", c1 * std::pow(lambda, k + 1));
    return r;
}

BoundReport return_path_moments(int m, double big_n, double p) {
    if (m < 0) spec_error("return_path_moments: m must be >= 0");
    if (big_n < 1) spec_error("return_path_moments: N must be >= 1");
    if (!(p > 0 && p <= 1)) spec_error("return_path_moments: p must be in (0,1]");
    BoundReport r;
    r.name = "return_path_moments";
    r.inputs = {{"m", m}, {"N", big_n}, {"p", p}};
    double np2 = big_n * p * p;
    double first = std::pow(2.0 * std::sqrt(big_n) * p, 2 * m);
    r.put("first_moment_bound", first);
    // Pairs of out-and-back paths sharing their last k steps contribute
    // N^(2m-k) p^(2(k+2(m-k))) = (N p^2)^(2m-k); the exponent k+2(m-k) is the
    // per-path step count of the combined path.
    double second = 0;
    for (int k = 0; k <= m; ++k) {
        double term = std::pow(np2, 2 * m - k);
        second += term;
        r.put("overlap_term_" + std::to_string(k), term);
        r.put("overlap_exponent_" + std::to_string(k), static_cast<double>(k + 2 * (m - k)));
    }
    double mean_sq = std::pow(np2, 2 * m);  // (E N_m)^2 with E N_m = (N p^2)^m
    r.put("second_moment_sum", second);
    r.put("moment_ratio", second > 0 ? mean_sq / second : 0.0);
    r.flag("supercritical", np2 > 1.0);
    return r;
}

BoundReport relay_schedule(double delta, double eta, int64_t n, double c) {
    if (!(delta > 0 && delta < 0.25)) spec_error("relay_schedule: delta must be in (0, 1/4)");
    if (!(eta > 0 && eta < 1)) spec_error("relay_schedule: eta must be in (0,1)");
    if (n < 2) spec_error("relay_schedule: n must be >= 2");
    BoundReport r;
    r.name = "relay_schedule";
    r.inputs = {{"delta", delta}, {"eta", eta}, {"n", static_cast<double>(n)}, {"c", c}};
    double t0 = 2.0 / ((1.0 - 4.0 * delta) * eta);
    double t1 = t0 + 2.0;
    double attempts = std::pow(static_cast<double>(n), c) / t1;
    double lambda = std::sqrt(c * std::log(static_cast<double>(n)) / static_cast<double>(n));
    double c1 = 1.0 / (4.0 * std::exp(4.0));
    double p_push = c1 * lambda * lambda;
    r.put("t0", t0);
    r.put("t1", t1);
    r.put("attempts", attempts);
    r.put("lambda", lambda);
    r.put("push_probability", p_push);
    r.put("all_fail_bound", std::pow(1.0 - p_push, attempts));
    return r;
}

namespace {

double want(const std::map<std::string, double>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) spec_error("bounds eval: missing input '" + key + "'");
    return it->second;
}

double want_or(const std::map<std::string, double>& kv, const std::string& key, double dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
}

}  // namespace

BoundReport bounds_eval(const std::string& name, const std::map<std::string, double>& kv) {
    if (name == "dual_path_bound")
        return dual_path_bound(static_cast<int>(want(kv, "i")), want(kv, "lambda"),
                               want(kv, "d"), static_cast<int>(want_or(kv, "m_max", 50)));
    if (name == "equilibrium_occupancy_bound")
        return equilibrium_occupancy_bound(static_cast<int>(want(kv, "i")), want(kv, "lambda"),
                                           want_or(kv, "eta", 0.1));
    if (name == "subtree_extinction_bound")
        return subtree_extinction_bound(want(kv, "t"), want(kv, "d"),
                                        static_cast<int>(want(kv, "k")),
                                        static_cast<int64_t>(want(kv, "n")));
    if (name == "survival_bracket")
        return survival_bracket(static_cast<int64_t>(want(kv, "n")), want(kv, "lambda"),
                                want_or(kv, "eps", 0.1), want_or(kv, "eta", 0.1),
                                want_or(kv, "c0", 1.0));
    if (name == "critical_constant") {
        std::vector<int64_t> degrees;
        int k = static_cast<int>(want(kv, "k"));
        for (int i = 1; i <= k; ++i)
            degrees.push_back(static_cast<int64_t>(want(kv, "a" + std::to_string(i))));
        return critical_constant(k, degrees, static_cast<int64_t>(want(kv, "n")));
    }
    if (name == "push_probability_lower")
        return push_probability_lower(want(kv, "lambda"), static_cast<int>(want(kv, "k")));
    if (name == "return_path_moments")
        return return_path_moments(static_cast<int>(want(kv, "m")), want(kv, "N"), want(kv, "p"));
    if (name == "relay_schedule")
        return relay_schedule(want_or(kv, "delta", 0.1), want_or(kv, "eta", 0.2),
                              static_cast<int64_t>(want(kv, "n")), want(kv, "c"));
    spec_error("bounds eval: unknown bound '" + name + "'");
}

std::vector<std::string> bounds_names() {
    return {"dual_path_bound",     "equilibrium_occupancy_bound",
            "subtree_extinction_bound", "survival_bracket",
            "critical_constant",   "push_probability_lower",
            "return_path_moments", "relay_schedule"};
}

}  // namespace cps
