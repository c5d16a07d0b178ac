// Command-line front end; talks to the library through the C API only.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpsim.h"

using nlohmann::json;

namespace {

int fail(cps_status rc) {
    fprintf(stderr, "error: %s\n", cps_last_error());
    return rc;
}

std::string take(char* s) {
    std::string out = s ? s : "";
    cps_string_free(s);
    return out;
}

struct GraphHandle {
    cps_graph* g = nullptr;
    ~GraphHandle() { cps_graph_destroy(g); }
};

// Experiment flags shared by the run-style subcommands; merged over an
// optional JSON config file (flags win).
struct ExperimentFlags {
    std::string config_path;
    std::string graph;
    std::optional<double> lambda, c, delta, eta, horizon, q;
    std::optional<int64_t> K, L, replicates;
    std::optional<uint64_t> seed;
    std::optional<int> parallelism, probes;
    std::string id, output;
    bool timing = false;

    void attach(CLI::App* cmd, bool with_levels, bool with_rate = true) {
        cmd->add_option("--config", config_path, "JSON config file (flags override it)");
        cmd->add_option("-g,--graph", graph, "graph spec, e.g. star:100 or periodic:3:2,1:4");
        if (with_rate) {
            cmd->add_option("-l,--lambda", lambda, "infection rate");
            cmd->add_option("-c,--c", c, "rate via lambda = sqrt(c log n / n)");
        }
        cmd->add_option("--delta", delta, "level margin in (0, 1/4)");
        cmd->add_option("--eta", eta, "wet threshold fraction in (0,1)");
        if (with_levels) {
            cmd->add_option("-K,--K", K, "lower level (ignite) / stop bound a (chain)");
            cmd->add_option("-L,--L", L, "target level; default floor((1-4 delta) lambda n)");
        }
        cmd->add_option("-T,--horizon", horizon, "time horizon (relay: the push budget)");
        cmd->add_option("-r,--replicates", replicates, "replicate count");
        cmd->add_option("-s,--seed", seed, "master seed");
        cmd->add_option("-o,--output", output, "CSV output path");
        cmd->add_option("-j,--parallelism", parallelism, "worker threads (0 = hardware)");
        cmd->add_option("--id", id, "experiment id");
        cmd->add_option("--q", q, "lambda2 target frequency");
        cmd->add_option("--probes", probes, "lambda2 probe count in [T/2, T]");
        cmd->add_flag("--timing", timing, "emit measured wall_ms (breaks byte-identity)");
    }

    json to_spec(const std::string& kind) const {
        json spec = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                fprintf(stderr, "error: cannot open config %s\n", config_path.c_str());
                exit(CPS_ERR_SPEC);
            }
            try {
                in >> spec;
            } catch (const json::exception& e) {
                fprintf(stderr, "error: bad config JSON: %s\n", e.what());
                exit(CPS_ERR_SPEC);
            }
        }
        spec["kind"] = kind;
        if (!graph.empty()) spec["graph"] = graph;
        if (lambda) spec["lambda"] = *lambda;
        if (c) spec["c"] = *c;
        if (delta) spec["delta"] = *delta;
        if (eta) spec["eta"] = *eta;
        if (K) spec["K"] = *K;
        if (L) spec["L"] = *L;
        if (horizon) spec["horizon"] = *horizon;
        if (replicates) spec["replicates"] = *replicates;
        if (seed) spec["seed"] = *seed;
        if (q) spec["q"] = *q;
        if (probes) spec["probes"] = *probes;
        if (parallelism) spec["parallelism"] = *parallelism;
        if (!id.empty()) spec["id"] = id;
        if (!output.empty()) spec["output"] = output;
        if (timing) spec["timing"] = true;
        return spec;
    }
};

int run_kind(const ExperimentFlags& flags, const std::string& kind) {
    json spec = flags.to_spec(kind);
    char* summary = nullptr;
    cps_status rc = cps_experiment_run(spec.dump().c_str(), &summary);
    std::string text = take(summary);
    if (rc != CPS_OK && text.empty()) return fail(rc);
    printf("%s\n", text.c_str());
    if (rc != CPS_OK) fprintf(stderr, "error: %s\n", cps_last_error());
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contact process simulator on stars and periodic trees"};
    app.require_subcommand(1);

    // topo
    std::string topo_spec;
    auto* topo = app.add_subcommand("topo", "build a graph and print its stats");
    topo->add_option("spec", topo_spec, "graph spec string")->required();

    // sim
    std::string sim_graph, sim_init = "all", sim_pins, sim_dump_log;
    double sim_lambda = 0, sim_horizon = -1, sim_pin_until = -1;
    int sim_freeze = -1;
    uint64_t sim_seed = 1;
    std::vector<double> sim_probes;
    bool sim_run_forever = false;
    auto* sim = app.add_subcommand("sim", "run one trajectory");
    sim->add_option("-g,--graph", sim_graph)->required();
    sim->add_option("-l,--lambda", sim_lambda)->required();
    sim->add_option("-T,--horizon", sim_horizon, "time horizon (omit to run until empty)");
    sim->add_option("--init", sim_init, "all | root | comma-separated ids");
    sim->add_option("--pins", sim_pins, "root | comma-separated ids");
    sim->add_option("--pin-until", sim_pin_until, "pins expire at this time");
    sim->add_option("--freeze-level", sim_freeze, "freeze births onto this level");
    sim->add_option("--probe", sim_probes, "probe times (repeatable)");
    sim->add_option("-s,--seed", sim_seed);
    sim->add_flag("--until-empty", sim_run_forever, "no horizon, stop at extinction");
    sim->add_option("--dump-log", sim_dump_log, "write the event log text here and exit");

    ExperimentFlags survival_f, ignite_f, chain_f, relay_f, lambda2_f, audit_f;
    survival_f.attach(app.add_subcommand("survival", "extinction times from all-occupied"), false);
    ignite_f.attach(app.add_subcommand("ignite", "star ignition runs from (0,1)"), true);
    chain_f.attach(app.add_subcommand("chain", "reduced-chain hitting runs"), true);
    relay_f.attach(app.add_subcommand("relay", "hub-to-hub relay experiment"), true);
    lambda2_f.attach(app.add_subcommand("lambda2", "bisect the local-survival proxy rate"), false,
                     false);
    audit_f.attach(app.add_subcommand("audit", "duality/additivity audit on random logs"), false);

    // bounds
    std::string bounds_name;
    std::vector<std::string> bounds_kv;
    bool bounds_json = false;
    auto* bounds = app.add_subcommand("bounds", "evaluate a closed-form bound");
    auto* bounds_eval = bounds->add_subcommand("eval", "evaluate by name");
    bounds_eval->add_option("name", bounds_name)->required();
    bounds_eval->add_option("kv", bounds_kv, "key=value inputs");
    bounds_eval->add_flag("--json", bounds_json, "print JSON instead of a CSV row");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "exact small-state-space solves");
    int64_t ostar_n = 0;
    double ostar_lambda = 0;
    std::optional<int64_t> ostar_K, ostar_L, ostar_j;
    auto* ostar = oracle->add_subcommand("star", "two-coordinate star chain");
    ostar->add_option("--n", ostar_n)->required();
    ostar->add_option("-l,--lambda", ostar_lambda)->required();
    ostar->add_option("-K,--K", ostar_K, "also solve P(reach K leaves before (0,0))");
    ostar->add_option("-L,--L", ostar_L, "also solve E min(T00, T_L)");
    ostar->add_option("--j", ostar_j, "report E T00 from (j,1) too");

    std::string ograph_spec, ograph_mode = "extinction", ograph_init, ograph_pins;
    double ograph_lambda = 0;
    int ograph_from = 0, ograph_to = 0, ograph_maxlen = 0;
    auto* ograph = oracle->add_subcommand("graph", "full configuration chain (<= 14 vertices)");
    ograph->add_option("-g,--spec", ograph_spec)->required();
    ograph->add_option("-l,--lambda", ograph_lambda)->required();
    ograph->add_option("--mode", ograph_mode, "stationary | extinction | paths");
    ograph->add_option("--init", ograph_init, "all | root | ids (extinction mode)");
    ograph->add_option("--pins", ograph_pins, "root | ids (stationary mode)");
    ograph->add_option("--from", ograph_from, "walk start (paths mode)");
    ograph->add_option("--to", ograph_to, "walk end (paths mode)");
    ograph->add_option("--max-len", ograph_maxlen, "max walk length (paths mode)");

    // report
    std::vector<std::string> report_inputs;
    std::string report_out;
    bool report_svg = false;
    auto* report = app.add_subcommand("report", "summarize experiment CSVs");
    report->add_option("-i,--input", report_inputs, "CSV files")->required();
    report->add_option("--out", report_out, "output directory");
    report->add_flag("--svg", report_svg, "also write SVG plots");

    CLI11_PARSE(app, argc, argv);

    auto ids_json = [](const std::string& s) -> json {
        if (s == "root" || s == "all") return s;
        json arr = json::array();
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ',')) arr.push_back(std::stoll(part));
        return arr;
    };

    if (topo->parsed()) {
        GraphHandle h;
        if (cps_status rc = cps_graph_create(topo_spec.c_str(), &h.g)) return fail(rc);
        char* out = nullptr;
        if (cps_status rc = cps_graph_stats_json(h.g, &out)) return fail(rc);
        printf("%s\n", take(out).c_str());
        return 0;
    }

    if (sim->parsed()) {
        GraphHandle h;
        if (cps_status rc = cps_graph_create(sim_graph.c_str(), &h.g)) return fail(rc);
        if (!sim_dump_log.empty()) {
            if (sim_horizon < 0) {
                fprintf(stderr, "error: --dump-log needs a horizon\n");
                return CPS_ERR_SPEC;
            }
            char* text = nullptr;
            if (cps_status rc = cps_eventlog_text(h.g, sim_lambda, sim_horizon, sim_seed, &text))
                return fail(rc);
            std::ofstream out(sim_dump_log, std::ios::binary);
            out << take(text);
            printf("{\"written\":\"%s\"}\n", sim_dump_log.c_str());
            return 0;
        }
        json opts;
        opts["lambda"] = sim_lambda;
        opts["seed"] = sim_seed;
        if (sim_horizon >= 0 && !sim_run_forever) opts["horizon"] = sim_horizon;
        opts["init"] = ids_json(sim_init);
        if (!sim_pins.empty()) opts["pins"] = ids_json(sim_pins);
        if (sim_pin_until >= 0) opts["pin_until"] = sim_pin_until;
        if (sim_freeze >= 0) opts["freeze_level"] = sim_freeze;
        if (!sim_probes.empty()) opts["probes"] = sim_probes;
        char* out = nullptr;
        if (cps_status rc = cps_simulate_json(h.g, opts.dump().c_str(), &out)) return fail(rc);
        printf("%s\n", take(out).c_str());
        return 0;
    }

    for (auto& [flags, kind] :
         std::initializer_list<std::pair<ExperimentFlags*, const char*>>{
             {&survival_f, "survival"}, {&ignite_f, "ignite"},   {&chain_f, "chain"},
             {&relay_f, "relay"},       {&lambda2_f, "lambda2"}, {&audit_f, "duality-audit"}}) {
        (void)flags;
        if (app.get_subcommand(kind == std::string("duality-audit") ? "audit" : kind)->parsed())
            return run_kind(*flags, kind);
    }

    if (bounds->parsed() && bounds_eval->parsed()) {
        json params = json::object();
        for (const auto& kv : bounds_kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) {
                fprintf(stderr, "error: expected key=value, got '%s'\n", kv.c_str());
                return CPS_ERR_SPEC;
            }
            params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        }
        char* out = nullptr;
        if (cps_status rc = cps_bounds_eval_json(bounds_name.c_str(), params.dump().c_str(), &out))
            return fail(rc);
        std::string text = take(out);
        if (bounds_json) {
            printf("%s\n", text.c_str());
        } else {
            // one CSV row: name,key=value,...
            json j = json::parse(text);
            std::string row = j["name"].get<std::string>();
            for (auto& [k, v] : j["inputs"].items())
                row += "," + k + "=" + json(v).dump();
            for (auto& [k, v] : j["values"].items())
                row += "," + k + "=" + json(v).dump();
            for (auto& [k, v] : j["flags"].items())
                row += "," + k + "=" + std::string(v.get<bool>() ? "1" : "0");
            printf("%s\n", row.c_str());
        }
        return 0;
    }

    if (oracle->parsed()) {
        if (ostar->parsed()) {
            json opts = json::object();
            if (ostar_K) opts["K"] = *ostar_K;
            if (ostar_L) opts["L"] = *ostar_L;
            if (ostar_j) opts["j"] = *ostar_j;
            char* out = nullptr;
            if (cps_status rc =
                    cps_oracle_star_json(ostar_n, ostar_lambda, opts.dump().c_str(), &out))
                return fail(rc);
            printf("%s\n", take(out).c_str());
            return 0;
        }
        if (ograph->parsed()) {
            json opts;
            opts["mode"] = ograph_mode;
            if (!ograph_init.empty()) opts["init"] = ids_json(ograph_init);
            if (!ograph_pins.empty()) opts["pins"] = ids_json(ograph_pins);
            if (ograph_mode == "paths") {
                opts["from"] = ograph_from;
                opts["to"] = ograph_to;
                opts["max_len"] = ograph_maxlen;
            }
            char* out = nullptr;
            if (cps_status rc = cps_oracle_graph_json(ograph_spec.c_str(), ograph_lambda,
                                                      opts.dump().c_str(), &out))
                return fail(rc);
            printf("%s\n", take(out).c_str());
            return 0;
        }
        fprintf(stderr, "error: oracle needs a subcommand (star | graph)\n");
        return CPS_ERR_SPEC;
    }

    if (report->parsed()) {
        std::string joined;
        for (const auto& p : report_inputs) {
            if (!joined.empty()) joined += ';';
            joined += p;
        }
        char* out = nullptr;
        if (cps_status rc = cps_report_csv(joined.c_str(), "json",
                                           report_out.empty() ? nullptr : report_out.c_str(),
                                           report_svg ? 1 : 0, &out))
            return fail(rc);
        printf("%s\n", take(out).c_str());
        return 0;
    }

    return 0;
}
