#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"
#include "topology.hpp"

namespace cps {

inline constexpr int64_t kDefaultEventCap = 20'000'000;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Occupied set plus permanently-occupied (pinned) vertices and per-vertex
// frozen-birth counters. Pinned vertices are always occupied.
struct Configuration {
    std::vector<uint8_t> occupied;
    std::vector<uint8_t> pinned;
    int64_t occupied_count = 0;
    int64_t pinned_count = 0;
    std::map<int32_t, int64_t> frozen;

    static Configuration empty_on(const Graph& g);
    static Configuration all_on(const Graph& g);
    static Configuration of(const Graph& g, std::span<const int32_t> vs);

    bool test(int32_t v) const { return occupied[v] != 0; }
    void occupy(int32_t v) {
        if (!occupied[v]) {
            occupied[v] = 1;
            ++occupied_count;
        }
    }
    void vacate(int32_t v) {
        if (occupied[v] && !pinned[v]) {
            occupied[v] = 0;
            --occupied_count;
        }
    }
    void pin(int32_t v) {
        occupy(v);
        if (!pinned[v]) {
            pinned[v] = 1;
            ++pinned_count;
        }
    }
    int64_t nonpinned_count() const { return occupied_count - pinned_count; }
    std::vector<int32_t> occupied_vertices() const;
    uint64_t occupied_mask() const;  // graphs with <= 64 vertices only
};

// One Poisson realization: recovery marks (rate 1 per vertex) and
// transmission arrows (rate lambda per directed edge), merged in time order.
struct Event {
    double t;
    int32_t from;
    int32_t to;  // -1: recovery at `from`; else arrow from -> to
};

struct EventLog {
    double horizon = 0;
    double lambda = 0;
    std::vector<Event> events;  // sorted by time

    std::string to_text() const;  // "t <time> R <v>" / "t <time> A <from> <to>" lines
};

EventLog generate_event_log(const Graph& g, double lambda, double horizon, RngStream& rng,
                            int64_t event_cap = kDefaultEventCap);

// Deterministic forward evolution on a fixed log. Pinned vertices ignore
// recovery marks; births onto vertices at `freeze_level` increment frozen
// counters instead of occupying.
Configuration evolve_on_log(const Graph& g, const EventLog& log, const Configuration& init,
                            double t, int32_t freeze_level = -1);

// Dual set at dual time t, read off the same log backwards from real time t.
// Satisfies, exactly: x in evolve(A, t)  <=>  A intersects dual(x, t).
std::vector<int32_t> dual_on_log(const Graph& g, const EventLog& log, int32_t x, double t);

// First time the occupied set empties, if within the horizon.
std::optional<double> extinction_time_on_log(const Graph& g, const EventLog& log,
                                             const Configuration& init);

struct WatchSpec {
    int32_t center = -1;
    int64_t leaf_threshold = 0;  // occupied children of `center`
    bool stop_on_hit = true;
};

struct SimOptions {
    double horizon = kInf;
    bool stop_when_empty = true;
    std::vector<double> probe_times;  // sorted ascending
    std::vector<int32_t> pins;
    double pin_until = kInf;   // pins expire at this time and recover normally after
    int32_t freeze_level = -1; // births onto this level are counted, not simulated
    std::optional<WatchSpec> watch;
    bool stop_on_probe_root = false;  // stop once a probe records the root occupied
};

struct SimOutcome {
    // First time nothing is occupied with no active pin left; a pinned run
    // can only go extinct after its pins expire.
    std::optional<double> extinction_time;
    bool censored = false;  // still alive at the horizon
    double end_time = 0;
    std::vector<double> probe_times;  // probes actually recorded
    std::vector<int64_t> probe_counts;
    std::vector<uint8_t> probe_root;
    std::map<int32_t, int64_t> frozen;
    int64_t frozen_total = 0;
    std::optional<double> watch_hit_time;
};

// Event-driven simulation; memory does not grow with the horizon. Transmission
// uses a per-vertex race at rate lambda*deg(v) with the target drawn uniformly
// at firing time, which realizes independent rate-lambda arrows per directed
// edge without rescheduling neighbors.
SimOutcome simulate_direct(const Graph& g, double lambda, const Configuration& init,
                           const SimOptions& opt, RngStream& rng);

struct SurvivalOutcome {
    double tau = 0;
    bool censored = false;
};

// Extinction time from all sites occupied, censored at `cap`.
SurvivalOutcome survival_time(const Graph& g, double lambda, double cap, RngStream& rng);

// Start from the root only, freeze births onto the deepest level, run until
// the interior empties. Returns the frozen counters.
std::map<int32_t, int64_t> frozen_boundary_run(const Graph& g, double lambda, RngStream& rng);

std::vector<double> geometric_probe_grid(double t0, double t1, int count);

}  // namespace cps
