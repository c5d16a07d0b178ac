#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "errors.hpp"

namespace cps {

Configuration Configuration::empty_on(const Graph& g) {
    Configuration c;
    c.occupied.assign(g.vertex_count(), 0);
    c.pinned.assign(g.vertex_count(), 0);
    return c;
}

Configuration Configuration::all_on(const Graph& g) {
    Configuration c;
    c.occupied.assign(g.vertex_count(), 1);
    c.pinned.assign(g.vertex_count(), 0);
    c.occupied_count = g.vertex_count();
    return c;
}

Configuration Configuration::of(const Graph& g, std::span<const int32_t> vs) {
    Configuration c = empty_on(g);
    for (int32_t v : vs) c.occupy(v);
    return c;
}

std::vector<int32_t> Configuration::occupied_vertices() const {
    std::vector<int32_t> out;
    for (size_t v = 0; v < occupied.size(); ++v)
        if (occupied[v]) out.push_back(static_cast<int32_t>(v));
    return out;
}

uint64_t Configuration::occupied_mask() const {
    uint64_t m = 0;
    for (size_t v = 0; v < occupied.size(); ++v)
        if (occupied[v]) m |= uint64_t{1} << v;
    return m;
}

std::string EventLog::to_text() const {
    std::string out;
    char buf[96];
    for (const Event& e : events) {
        if (e.to < 0)
            snprintf(buf, sizeof buf, "t %.17g R %d\n", e.t, e.from);
        else
            snprintf(buf, sizeof buf, "t %.17g A %d %d\n", e.t, e.from, e.to);
        out += buf;
    }
    return out;
}

EventLog generate_event_log(const Graph& g, double lambda, double horizon, RngStream& rng,
                            int64_t event_cap) {
    if (lambda < 0) spec_error("event log: lambda must be >= 0");
    if (horizon < 0) spec_error("event log: horizon must be >= 0");
    const int64_t V = g.vertex_count();
    double expected = horizon * (static_cast<double>(V) + lambda * 2.0 * static_cast<double>(V - 1));
    if (expected > static_cast<double>(event_cap))
        resource_error("event log: expected about " +
                       std::to_string(static_cast<int64_t>(expected)) +
                       " events, above the cap of " + std::to_string(event_cap));

    EventLog log;
    log.horizon = horizon;
    log.lambda = lambda;
    log.events.reserve(static_cast<size_t>(expected * 1.1) + 16);

    // Recovery marks, vertex by vertex.
    for (int32_t v = 0; v < V; ++v) {
        double t = rng.exponential(1.0);
        while (t <= horizon) {
            log.events.push_back({t, v, -1});
            t += rng.exponential(1.0);
        }
    }
    // Arrows per directed edge: child->parent then parent->child, children in id order.
    if (lambda > 0) {
        for (int32_t v = 1; v < V; ++v) {
            int32_t p = g.parent[v];
            double t = rng.exponential(lambda);
            while (t <= horizon) {
                log.events.push_back({t, v, p});
                t += rng.exponential(lambda);
            }
            t = rng.exponential(lambda);
            while (t <= horizon) {
                log.events.push_back({t, p, v});
                t += rng.exponential(lambda);
            }
        }
    }
    std::sort(log.events.begin(), log.events.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.from != b.from) return a.from < b.from;
        return a.to < b.to;
    });
    return log;
}

Configuration evolve_on_log(const Graph& g, const EventLog& log, const Configuration& init,
                            double t, int32_t freeze_level) {
    if (t > log.horizon) spec_error("evolve: t is beyond the log horizon");
    Configuration c = init;
    for (const Event& e : log.events) {
        if (e.t > t) break;
        if (e.to < 0) {
            c.vacate(e.from);
        } else if (c.occupied[e.from]) {
            if (freeze_level >= 0 && g.level[e.to] == freeze_level)
                c.frozen[e.to]++;
            else
                c.occupy(e.to);
        }
    }
    return c;
}

std::vector<int32_t> dual_on_log(const Graph& g, const EventLog& log, int32_t x, double t) {
    if (t > log.horizon) spec_error("dual: t is beyond the log horizon");
    std::vector<uint8_t> in(g.vertex_count(), 0);
    in[x] = 1;
    // Walk the log backwards from real time t; arrows are crossed against
    // their direction, recovery marks kill the dual particle at that site.
    auto begin = log.events.begin();
    auto it = std::upper_bound(begin, log.events.end(), t,
                               [](double tv, const Event& e) { return tv < e.t; });
    while (it != begin) {
        --it;
        const Event& e = *it;
        if (e.to < 0)
            in[e.from] = 0;
        else if (in[e.to])
            in[e.from] = 1;
    }
    std::vector<int32_t> out;
    for (size_t v = 0; v < in.size(); ++v)
        if (in[v]) out.push_back(static_cast<int32_t>(v));
    return out;
}

std::optional<double> extinction_time_on_log(const Graph& g, const EventLog& log,
                                             const Configuration& init) {
    (void)g;
    Configuration c = init;
    if (c.occupied_count == 0) return 0.0;
    for (const Event& e : log.events) {
        if (e.to < 0)
            c.vacate(e.from);
        else if (c.occupied[e.from])
            c.occupy(e.to);
        if (c.occupied_count == 0) return e.t;
    }
    return std::nullopt;
}

namespace {

enum : uint8_t { kRecovery = 0, kTransmit = 1, kUnpin = 2 };

struct QEv {
    double t;
    int32_t v;
    uint32_t epoch;
    uint8_t kind;
};
struct QEvLater {
    bool operator()(const QEv& a, const QEv& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.kind != b.kind) return a.kind > b.kind;
        return a.v > b.v;
    }
};

}  // namespace

SimOutcome simulate_direct(const Graph& g, double lambda, const Configuration& init,
                           const SimOptions& opt, RngStream& rng) {
    if (lambda < 0) spec_error("simulate: lambda must be >= 0");
    if (!std::isfinite(opt.horizon)) {
        if (!opt.stop_when_empty) spec_error("simulate: infinite horizon needs stop-when-empty");
        if ((!opt.pins.empty() || init.pinned_count > 0) && !std::isfinite(opt.pin_until))
            spec_error("simulate: infinite horizon with permanent pins never stops");
    }
    for (size_t i = 1; i < opt.probe_times.size(); ++i)
        if (opt.probe_times[i] < opt.probe_times[i - 1])
            spec_error("simulate: probe times must be sorted");

    const int64_t V = g.vertex_count();
    std::vector<uint8_t> occ(init.occupied);
    std::vector<uint8_t> pinned(V, 0);
    std::vector<uint32_t> epoch(V, 0);
    std::vector<int64_t> frozen;
    if (opt.freeze_level >= 0) frozen.assign(V, 0);

    int64_t occupied_count = 0;
    for (int64_t v = 0; v < V; ++v) occupied_count += occ[v];

    // Pins come from the options and from any pinned vertices in init.
    std::vector<int32_t> pin_list(opt.pins);
    for (int64_t v = 0; v < V; ++v)
        if (init.pinned[v]) pin_list.push_back(static_cast<int32_t>(v));
    int64_t pinned_occupied = 0;
    for (int32_t v : pin_list) {
        if (pinned[v]) continue;
        pinned[v] = 1;
        ++pinned_occupied;
        if (!occ[v]) {
            occ[v] = 1;
            ++occupied_count;
        }
    }
    bool pins_active = pinned_occupied > 0;

    SimOutcome out;
    int64_t watch_children = 0;
    bool watch_center_seen = false;
    const bool watching = opt.watch.has_value();
    const int32_t watch_center = watching ? opt.watch->center : -1;
    if (watching) {
        for (int32_t u : g.children(watch_center)) watch_children += occ[u];
        watch_center_seen = occ[watch_center] != 0;
    }

    std::priority_queue<QEv, std::vector<QEv>, QEvLater> queue;

    auto schedule_for = [&](int32_t v, double now) {
        // Fresh clocks for a newly occupied vertex (or a newly unpinned one).
        if (!(pinned[v] && pins_active)) queue.push({now + rng.exponential(1.0), v, epoch[v], kRecovery});
        int32_t deg = g.degree(v);
        if (lambda > 0 && deg > 0)
            queue.push({now + rng.exponential(lambda * deg), v, epoch[v], kTransmit});
    };

    double now = 0;
    for (int64_t v = 0; v < V; ++v)
        if (occ[v]) schedule_for(static_cast<int32_t>(v), 0.0);
    if (pins_active && std::isfinite(opt.pin_until))
        queue.push({opt.pin_until, -1, 0, kUnpin});

    size_t probe_idx = 0;
    bool probe_stop = false;
    auto flush_probes = [&](double upto) {
        while (probe_idx < opt.probe_times.size() && opt.probe_times[probe_idx] <= upto) {
            out.probe_times.push_back(opt.probe_times[probe_idx]);
            out.probe_counts.push_back(occupied_count);
            out.probe_root.push_back(occ[g.root]);
            ++probe_idx;
            if (opt.stop_on_probe_root && occ[g.root]) {
                probe_stop = true;
                break;
            }
        }
    };

    // Extinction means nothing occupied and no active pin left to re-light.
    auto note_extinct = [&](double t) {
        if (!out.extinction_time && !pins_active && occupied_count == 0) out.extinction_time = t;
    };
    note_extinct(0.0);
    bool stopped = false;
    if (opt.stop_when_empty && occupied_count == 0) stopped = true;

    bool watch_stopped = false;
    while (!stopped && !queue.empty()) {
        QEv ev = queue.top();
        if (ev.t > opt.horizon) break;
        queue.pop();
        flush_probes(ev.t);
        if (probe_stop) break;
        now = ev.t;

        if (ev.kind == kUnpin) {
            pins_active = false;
            for (int32_t v : pin_list) {
                if (!pinned[v]) continue;
                pinned[v] = 0;
                --pinned_occupied;
                if (occ[v]) queue.push({now + rng.exponential(1.0), v, epoch[v], kRecovery});
            }
            note_extinct(now);
            if (opt.stop_when_empty && occupied_count == 0) break;
            continue;
        }

        int32_t v = ev.v;
        if (ev.epoch != epoch[v] || !occ[v]) continue;  // stale clock

        if (ev.kind == kRecovery) {
            if (pinned[v] && pins_active) continue;
            occ[v] = 0;
            --occupied_count;
            ++epoch[v];
            if (watching && g.parent[v] == watch_center) --watch_children;
            note_extinct(now);
            if (opt.stop_when_empty && occupied_count == 0) break;
        } else {
            auto nb = g.neighbors(v);
            int32_t u = nb[rng.below(nb.size())];
            if (opt.freeze_level >= 0 && g.level[u] == opt.freeze_level) {
                frozen[u]++;
                out.frozen_total++;
            } else if (!occ[u]) {
                occ[u] = 1;
                ++occupied_count;
                ++epoch[u];
                schedule_for(u, now);
                if (watching) {
                    if (g.parent[u] == watch_center) ++watch_children;
                    if (u == watch_center) watch_center_seen = true;
                }
            }
            queue.push({now + rng.exponential(lambda * nb.size()), v, epoch[v], kTransmit});
        }

        if (watching && !out.watch_hit_time && watch_center_seen &&
            watch_children >= opt.watch->leaf_threshold) {
            out.watch_hit_time = now;
            if (opt.watch->stop_on_hit) {
                watch_stopped = true;
                break;
            }
        }
    }

    // Every exit except a watch or probe stop leaves the configuration
    // constant from `now` to the horizon, so remaining probes read the
    // current state.
    if (!watch_stopped && !probe_stop) flush_probes(opt.horizon);
    out.end_time = watch_stopped            ? *out.watch_hit_time
                   : std::isfinite(opt.horizon) ? opt.horizon
                                                : now;
    out.censored = !out.extinction_time;
    if (opt.freeze_level >= 0)
        for (int64_t v = 0; v < V; ++v)
            if (frozen[v] > 0) out.frozen[static_cast<int32_t>(v)] = frozen[v];
    return out;
}

SurvivalOutcome survival_time(const Graph& g, double lambda, double cap, RngStream& rng) {
    if (cap < 0) spec_error("survival: cap must be >= 0");
    SimOptions opt;
    opt.horizon = cap;
    opt.stop_when_empty = true;
    SimOutcome res = simulate_direct(g, lambda, Configuration::all_on(g), opt, rng);
    if (res.extinction_time) return {*res.extinction_time, false};
    return {cap, true};
}

std::map<int32_t, int64_t> frozen_boundary_run(const Graph& g, double lambda, RngStream& rng) {
    SimOptions opt;
    opt.freeze_level = g.depth;
    opt.stop_when_empty = true;
    std::vector<int32_t> init{g.root};
    SimOutcome res = simulate_direct(g, lambda, Configuration::of(g, init), opt, rng);
    return res.frozen;
}

std::vector<double> geometric_probe_grid(double t0, double t1, int count) {
    std::vector<double> out;
    if (count <= 0 || t0 <= 0 || t1 < t0) return out;
    if (count == 1) return {t1};
    double r = std::pow(t1 / t0, 1.0 / (count - 1));
    double t = t0;
    for (int i = 0; i < count; ++i) {
        out.push_back(std::min(t, t1));
        t *= r;
    }
    out.back() = t1;
    return out;
}

}  // namespace cps
