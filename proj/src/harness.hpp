#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "engine.hpp"
#include "topology.hpp"

namespace cps {

enum class ExperimentKind { survival, ignite, chain, relay, lambda2, duality_audit };

std::string kind_name(ExperimentKind k);
ExperimentKind kind_from_name(const std::string& s);

// Mirrors the JSON config document field-for-field; CLI flags override.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::survival;
    std::string id;      // default "<kind>-<seed>"
    std::string graph;   // grammar string
    std::optional<double> lambda;
    std::optional<double> c;  // lambda = sqrt(c log n / n); exactly one of lambda/c
    double delta = 0.1;
    double eta = 0.2;
    std::optional<int64_t> K;
    std::optional<int64_t> L;
    std::optional<double> horizon;  // relay: the budget
    int64_t replicates = 1;
    uint64_t seed = 1;
    std::string output;  // CSV path; empty = keep in memory only
    int parallelism = 0; // 0 = hardware
    double q = 0.5;      // lambda2 target frequency
    int probes = 9;      // lambda2 probes in [horizon/2, horizon]
    bool timing = false; // emit measured wall_ms (breaks byte-identity)

    static ExperimentSpec from_json_text(const std::string& text);
    std::string to_json_text() const;
};

struct RunRecord {
    std::string experiment_id;
    int64_t replicate = 0;
    uint64_t derived_seed = 0;
    std::string outcome;
    double tau = std::numeric_limits<double>::quiet_NaN();
    bool censored = false;
    std::string hits;
    int64_t frozen_total = 0;
    double wall_ms = 0;
    double lambda_used = std::numeric_limits<double>::quiet_NaN();  // lambda2 probes vary it
};

// Spec with every derived quantity filled in.
struct ResolvedExperiment {
    ExperimentSpec spec;
    int64_t n = 0;
    int k = 0;
    std::string degrees;  // ';'-separated
    double lambda = 0;
    double c = std::numeric_limits<double>::quiet_NaN();
    int64_t K = 0;
    int64_t L = 0;
    double horizon = 0;
    int threads = 1;
};

struct Summary {
    std::string experiment_id;
    int64_t count = 0;
    int64_t censored = 0;
    int64_t tau_count = 0;
    double tau_mean = 0, tau_median = 0, tau_sd = 0;
    std::map<std::string, int64_t> outcome_counts;

    double censored_fraction() const { return count ? double(censored) / double(count) : 0.0; }
    double tau_se() const { return tau_count ? tau_sd / std::sqrt(double(tau_count)) : 0.0; }
};

Summary summarize(const std::vector<RunRecord>& records);

struct ProbePoint {
    double lambda = 0;
    int64_t successes = 0;
    int64_t replicates = 0;
    double frequency() const { return replicates ? double(successes) / double(replicates) : 0.0; }
};

struct Lambda2Result {
    double lo = 0, hi = 0;
    double lambda_hat = 0;
    double scale = 0;  // sqrt(c_k log n / n) for the family
    bool warning = false;
    std::string warning_text;
    std::vector<ProbePoint> probes;
};

Lambda2Result lambda2_bisect(const DegreeSpec& family, int32_t depth, double horizon, double q,
                             int64_t replicates, uint64_t seed, int threads = 0, int probes = 9);

struct AuditResult {
    int64_t logs = 0;
    int64_t checks = 0;
    int64_t violations = 0;
    std::vector<int64_t> per_log;  // violations per trial
    std::string counterexample;    // first offending log in debug text form
    bool pass() const { return violations == 0; }
};

// Pathwise duality/additivity/monotonicity audit on random logs; graphs with
// at most 10 vertices get every initial set, larger ones a 64-set sample.
AuditResult duality_audit(const Graph& g, double lambda, double horizon, int64_t trials,
                          uint64_t seed, int threads = 0);

// One log's worth of checks; exposed so corrupted logs can be fed in
// directly. When dual_log is given the dual side reads it instead of `log`
// (the negative-control hook).
int64_t audit_single_log(const Graph& g, const EventLog& log, bool exhaustive,
                         std::string* counterexample, RngStream* sample_rng = nullptr,
                         const EventLog* dual_log = nullptr, int64_t* checks_out = nullptr);

struct ExperimentResult {
    ResolvedExperiment resolved;
    std::vector<RunRecord> records;
    Summary summary;
    std::optional<Lambda2Result> lambda2;
    std::optional<AuditResult> audit;

    std::string csv() const;
    std::string summary_json() const;
};

// Runs the experiment; deterministic in (spec, seed) regardless of
// parallelism. Writes spec.output (and a .summary.json sibling) when set.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Re-summarize existing CSV outputs; returns a JSON report and optionally
// writes summary.json plus SVG plots (survival curves, lambda2 probe curves,
// and a lambda-hat-vs-n trend when several lambda2 files are given).
std::string report_from_csvs(const std::vector<std::string>& paths, const std::string& out_dir,
                             bool with_svg);

void parallel_for(int64_t count, int threads, const std::function<void(int64_t)>& body);

}  // namespace cps
