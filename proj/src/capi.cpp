#include "cpsim.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "bounds.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "oracle.hpp"
#include "report.hpp"
#include "starchain.hpp"
#include "topology.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Run `fn`, translating exceptions into status codes + the thread-local message.
template <typename Fn>
cps_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return CPS_OK;
    } catch (const cps::Error& e) {
        g_last_error = e.what();
        return static_cast<cps_status>(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CPS_ERR_INTERNAL;
    }
}

json parse_options(const char* text) {
    if (!text || !*text) return json::object();
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        cps::spec_error(std::string("bad options JSON: ") + e.what());
    }
}

std::vector<int32_t> vertex_list(const cps::Graph& g, const json& v, const char* what) {
    std::vector<int32_t> out;
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s == "root")
            out.push_back(g.root);
        else if (s == "all")
            for (int32_t i = 0; i < g.vertex_count(); ++i) out.push_back(i);
        else
            cps::spec_error(std::string(what) + ": expected \"root\", \"all\" or an id array");
    } else if (v.is_array()) {
        for (const auto& e : v) out.push_back(e.get<int32_t>());
    } else {
        cps::spec_error(std::string(what) + ": expected \"root\", \"all\" or an id array");
    }
    for (int32_t id : out)
        if (id < 0 || id >= g.vertex_count())
            cps::spec_error(std::string(what) + ": vertex id out of range");
    return out;
}

}  // namespace

extern "C" {

const char* cps_version(void) { return "0.1.0"; }

const char* cps_last_error(void) { return g_last_error.c_str(); }

void cps_string_free(char* s) { std::free(s); }

cps_status cps_graph_create(const char* spec, cps_graph** out) {
    return guarded([&]() {
        if (!spec || !out) cps::spec_error("graph create: null argument");
        auto* g = new cps::Graph(cps::parse_graph_spec(spec));
        *out = reinterpret_cast<cps_graph*>(g);
    });
}

void cps_graph_destroy(cps_graph* g) { delete reinterpret_cast<cps::Graph*>(g); }

cps_status cps_graph_stats_json(const cps_graph* g, char** json_out) {
    return guarded([&]() {
        if (!g || !json_out) cps::spec_error("graph stats: null argument");
        const auto& graph = *reinterpret_cast<const cps::Graph*>(g);
        cps::GraphStats st = cps::graph_stats(graph);
        json j;
        j["spec"] = graph.spec_string;
        j["vertices"] = st.vertices;
        j["depth"] = graph.depth;
        j["level_sizes"] = st.level_sizes;
        j["hub_count"] = st.hub_count;
        j["leaf_count"] = st.leaf_count;
        j["N"] = st.big_n;
        if (graph.pin_target >= 0) j["pin_target"] = graph.pin_target;
        *json_out = dup_string(j.dump());
    });
}

cps_status cps_simulate_json(const cps_graph* g, const char* options_json, char** json_out) {
    return guarded([&]() {
        if (!g || !json_out) cps::spec_error("simulate: null argument");
        const auto& graph = *reinterpret_cast<const cps::Graph*>(g);
        json opts = parse_options(options_json);
        if (!opts.contains("lambda")) cps::spec_error("simulate: missing lambda");
        double lambda = opts.at("lambda").get<double>();
        uint64_t seed = opts.value("seed", uint64_t{1});

        cps::SimOptions so;
        if (opts.contains("horizon")) so.horizon = opts.at("horizon").get<double>();
        so.stop_when_empty = opts.value("stop_when_empty", true);
        if (opts.contains("probes")) so.probe_times = opts.at("probes").get<std::vector<double>>();
        if (opts.contains("pins")) so.pins = vertex_list(graph, opts.at("pins"), "pins");
        if (opts.contains("pin_until")) so.pin_until = opts.at("pin_until").get<double>();
        if (opts.contains("freeze_level")) so.freeze_level = opts.at("freeze_level").get<int32_t>();

        cps::Configuration init = cps::Configuration::empty_on(graph);
        if (opts.contains("init"))
            init = cps::Configuration::of(graph, vertex_list(graph, opts.at("init"), "init"));
        else
            init = cps::Configuration::all_on(graph);
        // Pins below a freeze boundary stay off it; init on the boundary is rejected.
        if (so.freeze_level >= 0)
            for (int32_t v : init.occupied_vertices())
                if (graph.level[v] == so.freeze_level)
                    cps::spec_error("simulate: init occupies the frozen boundary");

        cps::RngStream rng(seed);
        cps::SimOutcome res = cps::simulate_direct(graph, lambda, init, so, rng);
        json j;
        j["extinct"] = res.extinction_time.has_value();
        if (res.extinction_time) j["extinction_time"] = *res.extinction_time;
        j["censored"] = res.censored;
        j["end_time"] = res.end_time;
        j["probes"] = res.probe_times;
        j["probe_counts"] = res.probe_counts;
        j["probe_root"] = res.probe_root;
        j["frozen_total"] = res.frozen_total;
        json fr = json::object();
        for (auto [v, c] : res.frozen) fr[std::to_string(v)] = c;
        j["frozen"] = fr;
        if (res.watch_hit_time) j["watch_hit_time"] = *res.watch_hit_time;
        *json_out = dup_string(j.dump());
    });
}

cps_status cps_eventlog_text(const cps_graph* g, double lambda, double horizon, uint64_t seed,
                             char** text_out) {
    return guarded([&]() {
        if (!g || !text_out) cps::spec_error("event log: null argument");
        const auto& graph = *reinterpret_cast<const cps::Graph*>(g);
        cps::RngStream rng(seed);
        cps::EventLog log = cps::generate_event_log(graph, lambda, horizon, rng);
        *text_out = dup_string(log.to_text());
    });
}

cps_status cps_bounds_eval_json(const char* name, const char* params_json, char** json_out) {
    return guarded([&]() {
        if (!name || !json_out) cps::spec_error("bounds eval: null argument");
        json params = parse_options(params_json);
        std::map<std::string, double> kv;
        for (auto it = params.begin(); it != params.end(); ++it)
            kv[it.key()] = it.value().get<double>();
        *json_out = dup_string(cps::bounds_eval(name, kv).to_json());
    });
}

cps_status cps_oracle_star_json(int64_t n, double lambda, const char* options_json,
                                char** json_out) {
    return guarded([&]() {
        if (!json_out) cps::spec_error("oracle star: null argument");
        json opts = parse_options(options_json);
        json j;
        j["n"] = n;
        j["lambda"] = lambda;
        std::vector<double> ext = cps::star_expected_extinction(n, lambda);
        j["E_T00"] = {{"from_full", ext[cps::star_state_index(n, 1)]},
                      {"from_center", ext[cps::star_state_index(0, 1)]}};
        if (opts.contains("j")) {
            int64_t jj = opts.at("j").get<int64_t>();
            int cc = opts.value("c", 1);
            j["E_T00"]["from_state"] = ext[cps::star_state_index(jj, cc)];
        }
        if (opts.contains("K")) {
            int64_t K = opts.at("K").get<int64_t>();
            std::vector<double> hit = cps::star_hit_prob_before_extinction(n, lambda, K);
            j["hit_K"] = {{"K", K}, {"from_center", hit[cps::star_state_index(0, 1)]}};
        }
        if (opts.contains("L")) {
            int64_t L = opts.at("L").get<int64_t>();
            std::vector<double> mt = cps::star_expected_min_time(n, lambda, L);
            j["min_time"] = {{"L", L}, {"from_center", mt[cps::star_state_index(0, 1)]}};
        }
        *json_out = dup_string(j.dump());
    });
}

cps_status cps_oracle_graph_json(const char* graph_spec, double lambda, const char* options_json,
                                 char** json_out) {
    return guarded([&]() {
        if (!graph_spec || !json_out) cps::spec_error("oracle graph: null argument");
        cps::Graph g = cps::parse_graph_spec(graph_spec);
        json opts = parse_options(options_json);
        std::string mode = opts.value("mode", std::string("extinction"));
        json j;
        j["graph"] = g.spec_string;
        j["lambda"] = lambda;
        j["mode"] = mode;
        if (mode == "stationary") {
            std::vector<int32_t> pins;
            if (opts.contains("pins"))
                pins = vertex_list(g, opts.at("pins"), "pins");
            else if (g.pin_target >= 0)
                pins.push_back(g.pin_target);
            j["pins"] = pins;
            j["marginals"] = cps::small_graph_stationary(g, lambda, pins);
        } else if (mode == "extinction") {
            std::vector<int32_t> init;
            if (opts.contains("init"))
                init = vertex_list(g, opts.at("init"), "init");
            else
                for (int32_t v = 0; v < g.vertex_count(); ++v) init.push_back(v);
            j["E_tau"] = cps::small_graph_extinction_time(g, lambda, init);
        } else if (mode == "paths") {
            int32_t from = opts.at("from").get<int32_t>();
            int32_t to = opts.at("to").get<int32_t>();
            int max_len = opts.at("max_len").get<int>();
            cps::WalkCensus census = cps::enumerate_dual_paths(g, from, to, max_len, lambda);
            json lens = json::array();
            for (auto [len, count] : census.by_length) lens.push_back({len, count});
            j["walks"] = lens;
            j["weighted_sum"] = census.weighted_sum;
        } else {
            cps::spec_error("oracle graph: unknown mode '" + mode + "'");
        }
        *json_out = dup_string(j.dump());
    });
}

cps_status cps_experiment_run(const char* spec_json, char** summary_json_out) {
    cps_status audit_failed = CPS_OK;
    cps_status rc = guarded([&]() {
        if (!spec_json) cps::spec_error("experiment: null spec");
        cps::ExperimentSpec spec = cps::ExperimentSpec::from_json_text(spec_json);
        cps::ExperimentResult res = cps::run_experiment(spec);
        if (summary_json_out) *summary_json_out = dup_string(res.summary_json());
        if (res.audit && !res.audit->pass()) {
            g_last_error = "duality audit found " + std::to_string(res.audit->violations) +
                           " violations";
            audit_failed = CPS_ERR_AUDIT;
        }
    });
    return rc != CPS_OK ? rc : audit_failed;
}

cps_status cps_report_csv(const char* csv_path, const char* format, const char* out_dir,
                          int with_svg, char** summary_out) {
    return guarded([&]() {
        if (!csv_path) cps::spec_error("report: null csv path");
        (void)format;  // the summary is always JSON; CSV inputs stay as-is
        std::vector<std::string> paths;
        std::string cur;
        for (const char* p = csv_path;; ++p) {
            if (*p == ';' || *p == '\0') {
                if (!cur.empty()) paths.push_back(cur);
                cur.clear();
                if (*p == '\0') break;
            } else {
                cur += *p;
            }
        }
        std::string text =
            cps::report_from_csvs(paths, out_dir ? out_dir : std::string(), with_svg != 0);
        if (summary_out) *summary_out = dup_string(text);
    });
}

}  // extern "C"
