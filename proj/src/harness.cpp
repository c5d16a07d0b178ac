#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bounds.hpp"
#include "errors.hpp"
#include "oracle.hpp"
#include "report.hpp"
#include "starchain.hpp"

namespace cps {

using nlohmann::json;

std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::survival: return "survival";
        case ExperimentKind::ignite: return "ignite";
        case ExperimentKind::chain: return "chain";
        case ExperimentKind::relay: return "relay";
        case ExperimentKind::lambda2: return "lambda2";
        case ExperimentKind::duality_audit: return "duality-audit";
    }
    internal_error("bad experiment kind");
}

ExperimentKind kind_from_name(const std::string& s) {
    for (auto k : {ExperimentKind::survival, ExperimentKind::ignite, ExperimentKind::chain,
                   ExperimentKind::relay, ExperimentKind::lambda2, ExperimentKind::duality_audit})
        if (kind_name(k) == s) return k;
    spec_error("unknown experiment kind '" + s + "'");
}

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        spec_error(std::string("experiment spec: bad JSON: ") + e.what());
    }
    ExperimentSpec s;
    if (!j.contains("kind")) spec_error("experiment spec: missing 'kind'");
    s.kind = kind_from_name(j.at("kind").get<std::string>());
    if (j.contains("id")) s.id = j.at("id").get<std::string>();
    if (j.contains("graph")) s.graph = j.at("graph").get<std::string>();
    if (j.contains("lambda")) s.lambda = j.at("lambda").get<double>();
    if (j.contains("c")) s.c = j.at("c").get<double>();
    if (j.contains("delta")) s.delta = j.at("delta").get<double>();
    if (j.contains("eta")) s.eta = j.at("eta").get<double>();
    if (j.contains("K")) s.K = j.at("K").get<int64_t>();
    if (j.contains("L")) s.L = j.at("L").get<int64_t>();
    if (j.contains("horizon")) s.horizon = j.at("horizon").get<double>();
    if (j.contains("replicates")) s.replicates = j.at("replicates").get<int64_t>();
    if (j.contains("seed")) s.seed = j.at("seed").get<uint64_t>();
    if (j.contains("output")) s.output = j.at("output").get<std::string>();
    if (j.contains("parallelism")) s.parallelism = j.at("parallelism").get<int>();
    if (j.contains("q")) s.q = j.at("q").get<double>();
    if (j.contains("probes")) s.probes = j.at("probes").get<int>();
    if (j.contains("timing")) s.timing = j.at("timing").get<bool>();
    return s;
}

std::string ExperimentSpec::to_json_text() const {
    json j;
    j["kind"] = kind_name(kind);
    if (!id.empty()) j["id"] = id;
    j["graph"] = graph;
    if (lambda) j["lambda"] = *lambda;
    if (c) j["c"] = *c;
    j["delta"] = delta;
    j["eta"] = eta;
    if (K) j["K"] = *K;
    if (L) j["L"] = *L;
    if (horizon) j["horizon"] = *horizon;
    j["replicates"] = replicates;
    j["seed"] = seed;
    if (!output.empty()) j["output"] = output;
    j["parallelism"] = parallelism;
    j["q"] = q;
    j["probes"] = probes;
    j["timing"] = timing;
    return j.dump();
}

void parallel_for(int64_t count, int threads, const std::function<void(int64_t)>& body) {
    if (count <= 0) return;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = static_cast<int>(std::min<int64_t>(std::max(threads, 1), count));
    if (threads == 1) {
        for (int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int64_t> next{0};
    std::mutex mu;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            while (true) {
                int64_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

Summary summarize(const std::vector<RunRecord>& records) {
    if (records.empty()) spec_error("summarize: no records");
    Summary s;
    s.experiment_id = records.front().experiment_id;
    std::vector<double> taus;
    for (const auto& r : records) {
        if (r.experiment_id != s.experiment_id)
            spec_error("summarize: mixed experiment ids ('" + s.experiment_id + "' vs '" +
                       r.experiment_id + "')");
        ++s.count;
        if (r.censored)
            ++s.censored;
        else if (!std::isnan(r.tau))
            taus.push_back(r.tau);
        s.outcome_counts[r.outcome]++;
    }
    s.tau_count = static_cast<int64_t>(taus.size());
    if (s.tau_count > 0) {
        std::sort(taus.begin(), taus.end());
        double sum = 0;
        for (double t : taus) sum += t;
        s.tau_mean = sum / s.tau_count;
        s.tau_median = s.tau_count % 2 ? taus[s.tau_count / 2]
                                       : 0.5 * (taus[s.tau_count / 2 - 1] + taus[s.tau_count / 2]);
        double ss = 0;
        for (double t : taus) ss += (t - s.tau_mean) * (t - s.tau_mean);
        s.tau_sd = s.tau_count > 1 ? std::sqrt(ss / (s.tau_count - 1)) : 0.0;
    }
    return s;
}

namespace {

ResolvedExperiment resolve(const ExperimentSpec& in) {
    ExperimentSpec spec = in;
    if (spec.replicates < 1) spec_error("experiment: replicates must be >= 1");
    if (!(spec.delta > 0 && spec.delta < 0.25)) spec_error("experiment: delta must be in (0,1/4)");
    if (!(spec.eta > 0 && spec.eta < 1)) spec_error("experiment: eta must be in (0,1)");
    if (!(spec.q > 0 && spec.q < 1)) spec_error("experiment: q must be in (0,1)");
    if (spec.graph.empty()) spec_error("experiment: missing graph spec");
    if (spec.id.empty()) spec.id = kind_name(spec.kind) + "-" + std::to_string(spec.seed);

    ResolvedExperiment r;
    Graph g = parse_graph_spec(spec.graph);
    r.n = g.spec.n;
    r.k = g.spec.k();
    r.degrees = g.spec.degrees_string(';');

    if (spec.kind == ExperimentKind::lambda2) {
        if (spec.lambda || spec.c)
            spec_error("lambda2: the rate is searched for; give neither lambda nor c");
        r.lambda = 0;
    } else {
        if (spec.lambda.has_value() == spec.c.has_value())
            spec_error("experiment: exactly one of lambda or c must be given");
        if (spec.lambda) {
            r.lambda = *spec.lambda;
            if (r.lambda < 0) spec_error("experiment: lambda must be >= 0");
        } else {
            if (r.n < 2) spec_error("experiment: c-form rate needs a graph with n >= 2");
            r.lambda = lambda_from_c(*spec.c, r.n);
            r.c = *spec.c;
        }
    }

    bool needs_levels = spec.kind == ExperimentKind::ignite ||
                        spec.kind == ExperimentKind::chain || spec.kind == ExperimentKind::relay;
    if (needs_levels) {
        if (r.n < 1) spec_error("experiment: this kind needs a graph with a hub count n");
        if (r.lambda <= 0) spec_error("experiment: this kind needs lambda > 0");
        double ln_n = std::log(std::max<double>(2.0, static_cast<double>(r.n)));
        r.L = spec.L ? *spec.L
                     : static_cast<int64_t>(
                           std::floor((1.0 - 4.0 * spec.delta) * r.lambda * double(r.n)));
        if (spec.kind == ExperimentKind::chain) {
            // K doubles as the lower stop bound a; default ceil(eta*L).
            r.K = spec.K ? *spec.K : static_cast<int64_t>(std::ceil(spec.eta * double(r.L)));
        } else {
            r.K = spec.K ? *spec.K
                         : static_cast<int64_t>(std::floor(r.lambda * double(r.n) / std::sqrt(ln_n)));
        }
        if (r.L < 1 || r.L > r.n)
            spec_error("experiment: L = " + std::to_string(r.L) + " out of range [1, n]");
        if (r.K < 1) spec_error("experiment: K must be >= 1, got " + std::to_string(r.K));
        if (r.K > r.L)
            spec_error("experiment: unsatisfiable levels, K = " + std::to_string(r.K) + " > L = " +
                       std::to_string(r.L));
    }

    if (spec.horizon) {
        r.horizon = *spec.horizon;
        if (r.horizon < 0) spec_error("experiment: horizon must be >= 0");
    } else {
        switch (spec.kind) {
            case ExperimentKind::survival: {
                // Scale with the survival lower end so censoring stays rare.
                double h = 100;
                if (r.lambda > 0 && r.n >= 2) {
                    auto br = survival_bracket(r.n, r.lambda, 0.1, 0.1, 1.0);
                    h = 20.0 * br.value("lower");
                }
                r.horizon = std::clamp(h, 10.0, 1e7);
                break;
            }
            case ExperimentKind::ignite:
            case ExperimentKind::chain:
                r.horizon = kInf;
                break;
            case ExperimentKind::relay:
                spec_error("relay: a horizon (the push budget) is required");
            case ExperimentKind::lambda2:
                r.horizon = 1000;
                break;
            case ExperimentKind::duality_audit:
                r.horizon = 3;
                break;
        }
    }
    r.threads = spec.parallelism;
    r.spec = spec;
    return r;
}

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void run_survival(const ResolvedExperiment& re, std::vector<RunRecord>& records) {
    Graph g = parse_graph_spec(re.spec.graph);
    parallel_for(re.spec.replicates, re.threads, [&](int64_t i) {
        RunRecord& rec = records[i];
        double t0 = now_ms();
        RngStream rng(rec.derived_seed);
        SurvivalOutcome s = survival_time(g, re.lambda, re.horizon, rng);
        rec.tau = s.tau;
        rec.censored = s.censored;
        rec.outcome = s.censored ? "censored" : "died";
        rec.wall_ms = now_ms() - t0;
    });
}

void run_ignite(const ResolvedExperiment& re, std::vector<RunRecord>& records) {
    parallel_for(re.spec.replicates, re.threads, [&](int64_t i) {
        RunRecord& rec = records[i];
        double t0 = now_ms();
        RngStream rng(rec.derived_seed);
        IgnitionRecord ir = ignition_run(re.n, re.lambda, re.K, re.L, rng, re.horizon);
        rec.tau = ir.elapsed;
        rec.censored = ir.censored;
        rec.outcome = ir.censored ? "censored" : (ir.hit_l ? "ignited" : "died");
        rec.hits = std::string("K=") + (ir.hit_k ? "1" : "0") + "|L=" + (ir.hit_l ? "1" : "0");
        rec.wall_ms = now_ms() - t0;
    });
}

void run_chain(const ResolvedExperiment& re, std::vector<RunRecord>& records) {
    StarChainParams params = make_star_chain_params(re.lambda, re.n, re.spec.delta);
    if (params.level != re.L && !re.spec.L)
        internal_error("chain: resolved L disagrees with parameters");
    int64_t a = re.K, b = re.L;
    if (a >= b) spec_error("chain: need a < b");
    ReducedStopSpec stop;
    stop.below_a = a;
    stop.hit_b = b;
    stop.horizon = re.horizon;
    parallel_for(re.spec.replicates, re.threads, [&](int64_t i) {
        RunRecord& rec = records[i];
        double t0 = now_ms();
        RngStream rng(rec.derived_seed);
        ReducedRecord rr = run_reduced_chain(params, b - 1, stop, rng);
        rec.tau = rr.elapsed;
        switch (rr.reason) {
            case ChainStop::below_a: rec.outcome = "below_a"; break;
            case ChainStop::hit_b: rec.outcome = "hit_b"; break;
            case ChainStop::horizon: rec.outcome = "horizon"; rec.censored = true; break;
            case ChainStop::absorbed: rec.outcome = "absorbed"; break;
        }
        rec.hits = std::string("a=") + (rr.reason == ChainStop::below_a ? "1" : "0") + "|b=" +
                   (rr.reason == ChainStop::hit_b ? "1" : "0");
        rec.wall_ms = now_ms() - t0;
    });
}

void run_relay(const ResolvedExperiment& re, std::vector<RunRecord>& records) {
    Graph g = parse_graph_spec(re.spec.graph);
    if (g.spec.n < 1 || g.depth < g.spec.k() + 1)
        spec_error("relay: graph must be periodic with depth >= k+1");
    int32_t target = -1;
    for (int32_t v = 0; v < g.vertex_count(); ++v)
        if (g.level[v] == g.spec.k() + 1 && g.hub[v]) {
            target = v;
            break;
        }
    if (target < 0) spec_error("relay: no hub at distance k+1 from the root");
    int64_t threshold = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(re.spec.eta * double(re.L))));
    if (g.child_count(target) < threshold)
        spec_error("relay: target hub has " + std::to_string(g.child_count(target)) +
                   " leaves, needs " + std::to_string(threshold) +
                   " (build the graph one level deeper)");
    if (re.L > g.child_count(g.root)) spec_error("relay: L exceeds the root's leaf count");

    std::vector<int32_t> init_ids{g.root};
    auto kids = g.children(g.root);
    for (int64_t i = 0; i < re.L; ++i) init_ids.push_back(kids[i]);

    parallel_for(re.spec.replicates, re.threads, [&](int64_t i) {
        RunRecord& rec = records[i];
        double t0 = now_ms();
        RngStream rng(rec.derived_seed);
        SimOptions opt;
        opt.horizon = re.horizon;
        opt.stop_when_empty = true;
        opt.watch = WatchSpec{target, threshold, true};
        SimOutcome so = simulate_direct(g, re.lambda, Configuration::of(g, init_ids), opt, rng);
        bool success = so.watch_hit_time.has_value();
        rec.outcome = success ? "success" : "fail";
        rec.tau = success ? *so.watch_hit_time : re.horizon;
        rec.censored = false;
        rec.hits = std::string("wet=") + (success ? "1" : "0");
        rec.wall_ms = now_ms() - t0;
    });
}

}  // namespace

Lambda2Result lambda2_bisect(const DegreeSpec& family, int32_t depth, double horizon, double q,
                             int64_t replicates, uint64_t seed, int threads, int probes) {
    family.validate();
    if (!(q > 0 && q < 1)) spec_error("lambda2: q must be in (0,1)");
    if (horizon <= 0) spec_error("lambda2: horizon must be > 0");
    if (replicates < 1) spec_error("lambda2: replicates must be >= 1");
    if (depth < 1 || depth % (family.k() + 1) != 0)
        spec_error("lambda2: depth must be a positive multiple of k+1");
    Graph g = build_periodic_tree(family, depth);

    BoundReport cc = critical_constant(family.k(), family.degrees, family.n);
    if (!cc.valid()) spec_error("lambda2: family has c_k <= 0; no positive scale to bracket");
    Lambda2Result result;
    result.scale = cc.value("scale");

    std::vector<double> grid = geometric_probe_grid(horizon / 2, horizon, probes);
    int probe_counter = 0;
    auto probe = [&](double lam) {
        ProbePoint pt;
        pt.lambda = lam;
        pt.replicates = replicates;
        uint64_t probe_seed = derive_seed(seed, probe_counter++);
        std::atomic<int64_t> successes{0};
        parallel_for(replicates, threads, [&](int64_t r) {
            RngStream rng(derive_seed(probe_seed, r));
            SimOptions opt;
            opt.horizon = horizon;
            opt.stop_when_empty = true;
            opt.probe_times = grid;
            opt.stop_on_probe_root = true;
            std::vector<int32_t> init{g.root};
            SimOutcome so = simulate_direct(g, lam, Configuration::of(g, init), opt, rng);
            for (uint8_t occ : so.probe_root)
                if (occ) {
                    successes.fetch_add(1);
                    break;
                }
        });
        pt.successes = successes.load();
        result.probes.push_back(pt);
        return pt.frequency();
    };

    double lo = 0.35 * result.scale, hi = 3.5 * result.scale;
    double f_lo = probe(lo);
    double f_hi = probe(hi);
    int guard = 0;
    while (f_hi < q && guard++ < 4) {
        hi *= 1.7;
        f_hi = probe(hi);
    }
    guard = 0;
    while (f_lo >= q && lo > 1e-12 && guard++ < 4) {
        lo /= 1.7;
        f_lo = probe(lo);
    }
    if (f_lo >= q || f_hi < q) {
        result.warning = true;
        result.warning_text = "failed to bracket the target frequency; estimate is unreliable";
    } else {
        for (int iter = 0; iter < 5; ++iter) {
            double mid = 0.5 * (lo + hi);
            if (probe(mid) < q)
                lo = mid;
            else
                hi = mid;
        }
    }
    result.lo = lo;
    result.hi = hi;
    result.lambda_hat = 0.5 * (lo + hi);

    // Attractiveness makes the true response monotone in lambda; flag probe
    // pairs that disagree beyond noise.
    for (size_t i = 0; i < result.probes.size(); ++i) {
        for (size_t j = 0; j < result.probes.size(); ++j) {
            const auto& a = result.probes[i];
            const auto& b = result.probes[j];
            if (a.lambda >= b.lambda) continue;
            auto se = [](const ProbePoint& p) {
                double f = p.frequency();
                return std::sqrt(std::max(f * (1 - f), 1e-12) / double(p.replicates));
            };
            if (a.frequency() > b.frequency() + 3.0 * (se(a) + se(b))) {
                result.warning = true;
                result.warning_text = "non-monotone probe response beyond statistical noise";
            }
        }
    }
    return result;
}

namespace {

Configuration config_of_mask(const Graph& g, uint64_t mask) {
    Configuration c = Configuration::empty_on(g);
    for (int32_t v = 0; v < g.vertex_count(); ++v)
        if (mask >> v & 1) c.occupy(v);
    return c;
}

uint64_t mask_of_vertices(const std::vector<int32_t>& vs) {
    uint64_t m = 0;
    for (int32_t v : vs) m |= uint64_t{1} << v;
    return m;
}

}  // namespace

int64_t audit_single_log(const Graph& g, const EventLog& log, bool exhaustive,
                         std::string* counterexample, RngStream* sample_rng,
                         const EventLog* dual_log, int64_t* checks_out) {
    const int64_t V = g.vertex_count();
    if (V > 62) spec_error("audit: graphs above 62 vertices are not supported");
    const double t = log.horizon;
    const EventLog& dlog = dual_log ? *dual_log : log;

    std::vector<uint64_t> single(V), dualm(V);
    for (int32_t v = 0; v < V; ++v) {
        std::vector<int32_t> one{v};
        single[v] = evolve_on_log(g, log, Configuration::of(g, one), t).occupied_mask();
        dualm[v] = mask_of_vertices(dual_on_log(g, dlog, v, t));
    }

    int64_t violations = 0;
    int64_t checks = 0;
    auto note = [&](uint64_t A, int32_t x, uint64_t ev, const char* what) {
        ++violations;
        if (counterexample && counterexample->empty()) {
            std::ostringstream os;
            os << "# " << what << " violation on graph " << g.spec_string << "\n";
            os << "# A=0x" << std::hex << A << " x=" << std::dec << x << " evolve=0x" << std::hex
               << ev << std::dec << "\n";
            os << log.to_text();
            *counterexample = os.str();
        }
    };
    auto check_mask = [&](uint64_t A) {
        uint64_t ev = evolve_on_log(g, log, config_of_mask(g, A), t).occupied_mask();
        uint64_t un = 0;
        for (int32_t v = 0; v < V; ++v)
            if (A >> v & 1) un |= single[v];
        ++checks;
        if (ev != un) note(A, -1, ev, "additivity");
        for (int32_t x = 0; x < V; ++x) {
            bool lhs = (ev >> x & 1) != 0;
            bool rhs = (A & dualm[x]) != 0;
            ++checks;
            if (lhs != rhs) note(A, x, ev, "duality");
        }
    };

    if (exhaustive) {
        for (uint64_t A = 0; A < (uint64_t{1} << V); ++A) check_mask(A);
    } else {
        check_mask(0);
        check_mask((uint64_t{1} << V) - 1);
        for (int i = 0; i < 62; ++i) {
            uint64_t A = sample_rng ? sample_rng->next_u64() : 0x9E3779B97F4A7C15ull * (i + 1);
            check_mask(A & ((uint64_t{1} << V) - 1));
        }
    }
    if (checks_out) *checks_out += checks;
    return violations;
}

AuditResult duality_audit(const Graph& g, double lambda, double horizon, int64_t trials,
                          uint64_t seed, int threads) {
    if (trials < 1) spec_error("audit: trials must be >= 1");
    bool exhaustive = g.vertex_count() <= 10;
    AuditResult res;
    res.logs = trials;
    std::vector<int64_t> violations(trials, 0);
    std::vector<int64_t> checks(trials, 0);
    parallel_for(trials, threads, [&](int64_t i) {
        RngStream rng(derive_seed(seed, i));
        EventLog log = generate_event_log(g, lambda, horizon, rng);
        violations[i] = audit_single_log(g, log, exhaustive, nullptr, &rng, nullptr, &checks[i]);
    });
    res.per_log = violations;
    for (int64_t i = 0; i < trials; ++i) {
        res.violations += violations[i];
        res.checks += checks[i];
    }
    if (res.violations > 0) {
        // Deterministic counterexample: replay the first offending log.
        for (int64_t i = 0; i < trials; ++i) {
            if (violations[i] == 0) continue;
            RngStream rng(derive_seed(seed, i));
            EventLog log = generate_event_log(g, lambda, horizon, rng);
            audit_single_log(g, log, exhaustive, &res.counterexample, &rng);
            break;
        }
    }
    return res;
}

namespace {

std::string csv_row(const ResolvedExperiment& re, const RunRecord& r, bool timing) {
    std::ostringstream os;
    double lam = std::isnan(r.lambda_used) ? re.lambda : r.lambda_used;
    os << csv_escape(r.experiment_id) << ',' << kind_name(re.spec.kind) << ','
       << csv_escape(re.spec.graph) << ',' << re.n << ',' << re.k << ',' << re.degrees << ','
       << format_double(lam) << ',' << format_double(re.c) << ',' << format_double(re.spec.delta)
       << ',' << format_double(re.spec.eta) << ',' << r.derived_seed << ',' << r.replicate << ','
       << r.outcome << ',' << format_double(r.tau) << ',' << (r.censored ? 1 : 0) << ','
       << r.hits << ',' << r.frozen_total << ',' << format_double(timing ? r.wall_ms : 0.0)
       << '\n';
    return os.str();
}

}  // namespace

std::string ExperimentResult::csv() const {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : records) out += csv_row(resolved, r, resolved.spec.timing);
    return out;
}

std::string ExperimentResult::summary_json() const {
    json j;
    j["experiment"] = json::parse(resolved.spec.to_json_text());
    j["resolved"] = {{"id", resolved.spec.id},
                     {"n", resolved.n},
                     {"k", resolved.k},
                     {"degrees", resolved.degrees},
                     {"lambda", resolved.lambda},
                     {"K", resolved.K},
                     {"L", resolved.L},
                     {"horizon", resolved.horizon}};
    if (!std::isnan(resolved.c)) {
        j["resolved"]["c"] = resolved.c;
        j["resolved"]["lambda_note"] = "lambda = sqrt(c*log(n)/n)";
    }
    j["seed_derivation"] = kSeedDerivation;
    j["replicates"] = summary.count;
    j["censored_fraction"] = summary.censored_fraction();
    if (summary.tau_count > 0) {
        double se = summary.tau_se();
        j["tau"] = {{"count", summary.tau_count}, {"mean", summary.tau_mean},
                    {"median", summary.tau_median}, {"sd", summary.tau_sd},
                    {"ci95", {summary.tau_mean - 1.96 * se, summary.tau_mean + 1.96 * se}}};
    }
    for (const auto& [outcome, count] : summary.outcome_counts) {
        double p = double(count) / double(summary.count);
        double se = std::sqrt(std::max(p * (1 - p), 0.0) / double(summary.count));
        j["frequencies"][outcome] = {{"count", count}, {"p", p},
                                     {"ci95", {std::max(0.0, p - 1.96 * se), std::min(1.0, p + 1.96 * se)}}};
    }
    if (lambda2) {
        json probes = json::array();
        for (const auto& p : lambda2->probes)
            probes.push_back({{"lambda", p.lambda}, {"successes", p.successes},
                              {"replicates", p.replicates}, {"frequency", p.frequency()}});
        j["lambda2"] = {{"lo", lambda2->lo},       {"hi", lambda2->hi},
                        {"lambda_hat", lambda2->lambda_hat}, {"scale", lambda2->scale},
                        {"warning", lambda2->warning},       {"warning_text", lambda2->warning_text},
                        {"probes", probes}};
    }
    if (audit) {
        j["audit"] = {{"logs", audit->logs},
                      {"checks", audit->checks},
                      {"violations", audit->violations},
                      {"pass", audit->pass()}};
    }
    return j.dump(2);
}

namespace {

struct CsvFileSummary {
    std::string path;
    std::string kind;
    int64_t n = 0;
    Summary summary;
    std::vector<double> taus;                          // censored included at cap
    std::vector<std::pair<double, double>> probe_curve; // lambda2: (lambda, frequency)
};

double to_double(const std::string& s) { return s.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(s); }

CsvFileSummary summarize_csv_file(const std::string& path) {
    CsvTable table = parse_csv(read_file(path));
    int c_id = table.column("experiment_id"), c_kind = table.column("kind"),
        c_n = table.column("n"), c_lambda = table.column("lambda"), c_out = table.column("outcome"),
        c_tau = table.column("tau"), c_cens = table.column("censored"),
        c_hits = table.column("hits"), c_rep = table.column("replicate"),
        c_seed = table.column("seed"), c_frozen = table.column("frozen_total");
    if (c_id < 0 || c_kind < 0 || c_out < 0 || c_tau < 0 || c_cens < 0)
        spec_error("report: '" + path + "' is not an experiment CSV");
    CsvFileSummary fs;
    fs.path = path;
    std::vector<RunRecord> records;
    for (const auto& row : table.rows) {
        RunRecord r;
        r.experiment_id = row[c_id];
        fs.kind = row[c_kind];
        if (c_n >= 0 && !row[c_n].empty()) fs.n = std::stoll(row[c_n]);
        if (c_rep >= 0) r.replicate = std::stoll(row[c_rep]);
        if (c_seed >= 0) r.derived_seed = std::stoull(row[c_seed]);
        r.outcome = row[c_out];
        r.tau = to_double(row[c_tau]);
        r.censored = row[c_cens] == "1";
        if (c_hits >= 0) r.hits = row[c_hits];
        if (c_frozen >= 0 && !row[c_frozen].empty()) r.frozen_total = std::stoll(row[c_frozen]);
        if (fs.kind == "lambda2" && c_lambda >= 0)
            fs.probe_curve.emplace_back(to_double(row[c_lambda]), r.tau);
        if (!std::isnan(r.tau)) fs.taus.push_back(r.tau);
        records.push_back(std::move(r));
    }
    fs.summary = summarize(records);
    std::sort(fs.probe_curve.begin(), fs.probe_curve.end());
    return fs;
}

// Linear interpolation of the frequency-q crossing of a lambda2 probe curve.
double probe_crossing(const std::vector<std::pair<double, double>>& curve, double q) {
    for (size_t i = 1; i < curve.size(); ++i) {
        auto [x0, f0] = curve[i - 1];
        auto [x1, f1] = curve[i];
        if ((f0 - q) * (f1 - q) <= 0 && f1 != f0)
            return x0 + (q - f0) / (f1 - f0) * (x1 - x0);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string report_from_csvs(const std::vector<std::string>& paths, const std::string& out_dir,
                             bool with_svg) {
    if (paths.empty()) spec_error("report: no input files");
    json out;
    out["files"] = json::array();
    std::vector<CsvFileSummary> all;
    for (const auto& p : paths) all.push_back(summarize_csv_file(p));

    std::vector<std::string> plots;
    for (const auto& fs : all) {
        json jf;
        jf["path"] = fs.path;
        jf["experiment_id"] = fs.summary.experiment_id;
        jf["kind"] = fs.kind;
        jf["count"] = fs.summary.count;
        jf["censored_fraction"] = fs.summary.censored_fraction();
        if (fs.summary.tau_count) {
            jf["tau"] = {{"mean", fs.summary.tau_mean}, {"median", fs.summary.tau_median},
                         {"sd", fs.summary.tau_sd}};
        }
        for (const auto& [o, cnt] : fs.summary.outcome_counts) jf["outcomes"][o] = cnt;
        if (fs.kind == "lambda2") {
            double hat = probe_crossing(fs.probe_curve, 0.5);
            if (!std::isnan(hat)) jf["lambda_hat_est"] = hat;
        }
        out["files"].push_back(jf);
    }

    if (with_svg && !out_dir.empty()) {
        // Survival curves: empirical fraction still alive at t.
        std::vector<PlotSeries> surv;
        for (const auto& fs : all) {
            if (fs.kind != "survival" || fs.taus.empty()) continue;
            std::vector<double> taus = fs.taus;
            std::sort(taus.begin(), taus.end());
            PlotSeries s;
            s.label = fs.summary.experiment_id;
            size_t stride = std::max<size_t>(1, taus.size() / 256);
            for (size_t i = 0; i < taus.size(); i += stride)
                s.points.emplace_back(taus[i], 1.0 - double(i + 1) / double(taus.size()));
            surv.push_back(std::move(s));
        }
        if (!surv.empty()) {
            std::string name = "survival_curves.svg";
            write_file(out_dir + "/" + name,
                       svg_plot("survival curves", "t", "P(tau > t)", surv, false, false));
            plots.push_back(name);
        }
        std::vector<PlotSeries> curves;
        PlotSeries trend;
        trend.label = "lambda_hat";
        for (const auto& fs : all) {
            if (fs.kind != "lambda2" || fs.probe_curve.empty()) continue;
            PlotSeries s;
            s.label = fs.summary.experiment_id;
            s.points = fs.probe_curve;
            curves.push_back(std::move(s));
            double hat = probe_crossing(fs.probe_curve, 0.5);
            if (!std::isnan(hat) && fs.n > 0) trend.points.emplace_back(double(fs.n), hat);
        }
        if (!curves.empty()) {
            std::string name = "lambda2_probes.svg";
            write_file(out_dir + "/" + name,
                       svg_plot("root-survival frequency vs lambda", "lambda", "frequency",
                                curves, false, false));
            plots.push_back(name);
        }
        if (trend.points.size() >= 2) {
            std::sort(trend.points.begin(), trend.points.end());
            std::string name = "lambda_hat_trend.svg";
            write_file(out_dir + "/" + name,
                       svg_plot("lambda_hat vs n", "n", "lambda_hat", {trend}, true, true));
            plots.push_back(name);
        }
    }
    out["plots"] = plots;
    std::string text = out.dump(2);
    if (!out_dir.empty()) write_file(out_dir + "/summary.json", text);
    return text;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    ExperimentResult result;
    result.resolved = resolve(spec);
    const ResolvedExperiment& re = result.resolved;

    result.records.resize(re.spec.replicates);
    for (int64_t i = 0; i < re.spec.replicates; ++i) {
        result.records[i].experiment_id = re.spec.id;
        result.records[i].replicate = i;
        result.records[i].derived_seed = derive_seed(re.spec.seed, i);
    }

    switch (re.spec.kind) {
        case ExperimentKind::survival:
            run_survival(re, result.records);
            break;
        case ExperimentKind::ignite:
            run_ignite(re, result.records);
            break;
        case ExperimentKind::chain:
            run_chain(re, result.records);
            break;
        case ExperimentKind::relay:
            run_relay(re, result.records);
            break;
        case ExperimentKind::lambda2: {
            Graph g = parse_graph_spec(re.spec.graph);
            Lambda2Result l2 = lambda2_bisect(g.spec, g.depth, re.horizon, re.spec.q,
                                              re.spec.replicates, re.spec.seed, re.threads,
                                              re.spec.probes);
            result.lambda2 = l2;
            // One record per probe, in probe order.
            result.records.clear();
            for (size_t i = 0; i < l2.probes.size(); ++i) {
                RunRecord rec;
                rec.experiment_id = re.spec.id;
                rec.replicate = static_cast<int64_t>(i);
                rec.derived_seed = derive_seed(re.spec.seed, i);
                rec.outcome = "probe";
                rec.lambda_used = l2.probes[i].lambda;
                rec.tau = l2.probes[i].frequency();
                rec.hits = "succ=" + std::to_string(l2.probes[i].successes) +
                           "|reps=" + std::to_string(l2.probes[i].replicates);
                result.records.push_back(rec);
            }
            break;
        }
        case ExperimentKind::duality_audit: {
            Graph g = parse_graph_spec(re.spec.graph);
            AuditResult ar = duality_audit(g, re.lambda, re.horizon, re.spec.replicates,
                                           re.spec.seed, re.threads);
            for (int64_t i = 0; i < re.spec.replicates; ++i) {
                RunRecord& rec = result.records[i];
                rec.outcome = ar.per_log[i] == 0 ? "pass" : "fail";
                rec.hits = "violations=" + std::to_string(ar.per_log[i]);
            }
            result.audit = std::move(ar);
            break;
        }
    }

    result.summary = summarize(result.records);
    if (!re.spec.output.empty()) {
        write_file(re.spec.output, result.csv());
        write_file(re.spec.output + ".summary.json", result.summary_json());
    }
    return result;
}

}  // namespace cps
