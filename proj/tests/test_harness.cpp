#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "errors.hpp"
#include "harness.hpp"
#include "oracle.hpp"
#include "report.hpp"
#include "test_util.hpp"

using namespace cps;
using nlohmann::json;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("spec json round trip and validation") {
    ExperimentSpec s = ExperimentSpec::from_json_text(
        R"({"kind":"survival","graph":"star:5","lambda":0.3,"replicates":4,"seed":9})");
    CHECK(s.kind == ExperimentKind::survival);
    CHECK(s.graph == "star:5");
    ExperimentSpec round = ExperimentSpec::from_json_text(s.to_json_text());
    CHECK(round.replicates == 4);
    CHECK(round.seed == 9);

    CHECK_THROWS_AS(ExperimentSpec::from_json_text("{"), Error);
    CHECK_THROWS_AS(ExperimentSpec::from_json_text(R"({"graph":"star:3"})"), Error);
    CHECK_THROWS_AS(kind_from_name("wrong"), Error);
}

TEST_CASE("unsatisfiable specs are rejected before running") {
    ExperimentSpec s;
    s.kind = ExperimentKind::ignite;
    s.graph = "star:100";
    s.lambda = 0.5;
    s.K = 80;
    s.L = 20;  // K > L
    s.replicates = 10;
    CHECK_THROWS_AS(run_experiment(s), Error);

    ExperimentSpec both;
    both.kind = ExperimentKind::survival;
    both.graph = "star:5";
    both.lambda = 0.3;
    both.c = 1.0;
    CHECK_THROWS_AS(run_experiment(both), Error);

    ExperimentSpec relay_no_budget;
    relay_no_budget.kind = ExperimentKind::relay;
    relay_no_budget.graph = "periodic:20:1:3";
    relay_no_budget.lambda = 0.5;
    CHECK_THROWS_AS(run_experiment(relay_no_budget), Error);
}

TEST_CASE("summaries") {
    RunRecord a;
    a.experiment_id = "x";
    a.outcome = "died";
    a.tau = 2.0;
    SUBCASE("single record summarizes to itself") {
        Summary s = summarize({a});
        CHECK(s.count == 1);
        CHECK(s.tau_mean == 2.0);
        CHECK(s.tau_median == 2.0);
    }
    SUBCASE("permutation invariance and exact mean") {
        std::vector<RunRecord> recs;
        for (int i = 0; i < 1000; ++i) {
            RunRecord r = a;
            r.replicate = i;
            r.tau = double(i % 10);
            recs.push_back(r);
        }
        Summary s1 = summarize(recs);
        std::reverse(recs.begin(), recs.end());
        Summary s2 = summarize(recs);
        CHECK(s1.tau_mean == doctest::Approx(4.5).epsilon(1e-12));
        CHECK(s1.tau_mean == s2.tau_mean);
        CHECK(s1.tau_median == s2.tau_median);
    }
    SUBCASE("mixed ids rejected") {
        RunRecord b = a;
        b.experiment_id = "y";
        CHECK_THROWS_AS(summarize({a, b}), Error);
    }
}

TEST_CASE("survival experiment matches the exact solver") {
    ExperimentSpec s;
    s.kind = ExperimentKind::survival;
    s.graph = "star:2";
    s.lambda = 0.5;
    s.replicates = 20000;
    s.seed = 42;
    s.horizon = 500.0;
    ExperimentResult res = run_experiment(s);
    CHECK(res.summary.count == 20000);
    CHECK(res.summary.censored == 0);
    double exact = small_graph_extinction_time(parse_graph_spec("star:2"), 0.5, {0, 1, 2});
    CHECK(std::abs(res.summary.tau_mean - exact) <= 3 * res.summary.tau_se());
}

TEST_CASE("experiment reruns are byte-identical and parallelism-independent") {
    auto run_csv = [&](int parallelism) {
        ExperimentSpec s;
        s.kind = ExperimentKind::survival;
        s.graph = "star:20";
        s.lambda = 0.25;
        s.replicates = 2000;
        s.seed = 7;
        s.horizon = 50.0;
        s.parallelism = parallelism;
        return run_experiment(s).csv();
    };
    std::string csv1 = run_csv(2);
    std::string csv2 = run_csv(2);
    std::string csv_serial = run_csv(1);
    CHECK(csv1 == csv2);
    CHECK(csv1 == csv_serial);
    CHECK(csv1.rfind(kCsvHeader, 0) == 0);
}

TEST_CASE("ignite and chain experiments produce sane rows") {
    ExperimentSpec s;
    s.kind = ExperimentKind::ignite;
    s.graph = "star:200";
    s.lambda = 0.3;
    s.replicates = 500;
    s.seed = 3;
    ExperimentResult res = run_experiment(s);
    CHECK(res.resolved.K >= 1);
    CHECK(res.resolved.L >= res.resolved.K);
    int64_t ignited = res.summary.outcome_counts.count("ignited")
                          ? res.summary.outcome_counts.at("ignited")
                          : 0;
    CHECK(ignited > 0);

    ExperimentSpec ch;
    ch.kind = ExperimentKind::chain;
    ch.graph = "star:10000";
    ch.lambda = 0.1;
    ch.delta = 0.1;
    ch.replicates = 200;
    ch.seed = 4;
    ExperimentResult cres = run_experiment(ch);
    CHECK(cres.resolved.L == 600);
    CHECK(cres.summary.outcome_counts.count("hit_b"));
}

TEST_CASE("relay experiment basics") {
    SUBCASE("lambda 0 never wets the target") {
        ExperimentSpec s;
        s.kind = ExperimentKind::relay;
        s.graph = "periodic:30:1:3";
        s.lambda = 0.0;
        s.replicates = 50;
        s.horizon = 30.0;
        CHECK_THROWS_AS(run_experiment(s), Error);  // lambda 0 gives L = 0
    }
    SUBCASE("zero budget never succeeds") {
        ExperimentSpec s;
        s.kind = ExperimentKind::relay;
        s.graph = "periodic:30:1:3";
        s.lambda = 0.6;
        s.replicates = 50;
        s.seed = 5;
        s.horizon = 1e-9;
        ExperimentResult res = run_experiment(s);
        CHECK(res.summary.outcome_counts.count("success") == 0);
    }
    SUBCASE("a generous budget relays with positive frequency") {
        ExperimentSpec s;
        s.kind = ExperimentKind::relay;
        s.graph = "periodic:30:1:3";
        s.lambda = 0.6;
        s.replicates = 200;
        s.seed = 6;
        s.horizon = 60.0;
        ExperimentResult res = run_experiment(s);
        CHECK(res.summary.outcome_counts.at("success") > 0);
    }
}

TEST_CASE("lambda2 probes and bisect") {
    SUBCASE("probe machinery: dead at lambda 0, alive at large lambda") {
        Graph g = parse_graph_spec("star:50");
        auto grid = geometric_probe_grid(10.0, 20.0, 5);
        RngStream rng(61);
        int dead_successes = 0, live_successes = 0;
        for (int i = 0; i < 60; ++i) {
            SimOptions opt;
            opt.horizon = 20.0;
            opt.probe_times = grid;
            opt.stop_on_probe_root = true;
            std::vector<int32_t> init{g.root};
            SimOutcome a = simulate_direct(g, 0.0, Configuration::of(g, init), opt, rng);
            for (uint8_t r : a.probe_root)
                if (r) {
                    ++dead_successes;
                    break;
                }
            SimOutcome b = simulate_direct(g, 2.0, Configuration::of(g, init), opt, rng);
            for (uint8_t r : b.probe_root)
                if (r) {
                    ++live_successes;
                    break;
                }
        }
        CHECK(dead_successes == 0);
        CHECK(live_successes >= 55);
    }
    SUBCASE("bisect brackets a plausible rate on a small family") {
        Lambda2Result r = lambda2_bisect(DegreeSpec{30, {1}}, 2, 200.0, 0.5, 60, 77, 2, 7);
        CHECK(r.lo < r.hi);
        CHECK(r.lambda_hat > 0);
        CHECK(r.probes.size() >= 7);
        CHECK(r.lambda_hat / r.scale > 0.2);
        CHECK(r.lambda_hat / r.scale < 10.0);
    }
    SUBCASE("depth must respect the period") {
        CHECK_THROWS_AS(lambda2_bisect(DegreeSpec{30, {1}}, 3, 100.0, 0.5, 10, 1, 1, 5), Error);
    }
}

TEST_CASE("duality audit passes on honest logs and catches a corrupted pairing") {
    Graph g = parse_graph_spec("periodic:3:2:2");
    AuditResult res = duality_audit(g, 0.5, 3.0, 400, 99, 2);
    CHECK(res.pass());
    CHECK(res.logs == 400);
    CHECK(res.violations == 0);
    CHECK(res.checks > 400 * 1000);

    // Negative control: evolve forward on one log, read the dual from a copy
    // with a single arrow reversed. The identity must break.
    Graph edge = build_star(1);
    EventLog fwd;
    fwd.horizon = 2.0;
    fwd.lambda = 0.5;
    fwd.events.push_back({1.0, 0, 1});  // arrow root -> leaf
    EventLog corrupted = fwd;
    corrupted.events[0] = {1.0, 1, 0};  // reversed
    std::string ce;
    int64_t violations = audit_single_log(edge, fwd, true, &ce, nullptr, &corrupted);
    CHECK(violations > 0);
    CHECK(ce.find("duality") != std::string::npos);
    CHECK(ce.find("t 1") != std::string::npos);  // offending log is embedded
}

TEST_CASE("experiment csv emission, parsing, and reporting") {
    std::string csv_path = tmp_path("cpsim_test_survival.csv");
    ExperimentSpec s;
    s.kind = ExperimentKind::survival;
    s.graph = "star:4";
    s.lambda = 0.4;
    s.replicates = 300;
    s.seed = 11;
    s.horizon = 200.0;
    s.output = csv_path;
    s.id = "rep-demo";
    ExperimentResult res = run_experiment(s);

    std::string text = read_file(csv_path);
    CHECK(text == res.csv());
    CsvTable table = parse_csv(text);
    CHECK(table.header.size() == 18);
    CHECK(table.rows.size() == 300);
    CHECK(table.rows[0][table.column("experiment_id")] == "rep-demo");
    CHECK(table.rows[0][table.column("wall_ms")] == "0");

    std::string dir = tmp_path("cpsim_report_dir");
    std::filesystem::create_directories(dir);
    std::string summary = report_from_csvs({csv_path}, dir, true);
    json j = json::parse(summary);
    CHECK(j["files"].size() == 1);
    CHECK(j["files"][0]["kind"] == "survival");
    CHECK(j["files"][0]["count"] == 300);
    CHECK(std::filesystem::exists(dir + "/summary.json"));
    CHECK(std::filesystem::exists(dir + "/survival_curves.svg"));

    // deterministic rendering
    std::string svg1 = read_file(dir + "/survival_curves.svg");
    report_from_csvs({csv_path}, dir, true);
    CHECK(read_file(dir + "/survival_curves.svg") == svg1);

    std::filesystem::remove(csv_path);
    std::filesystem::remove(csv_path + ".summary.json");
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv fields with commas are quoted and recovered") {
    ExperimentSpec s;
    s.kind = ExperimentKind::survival;
    s.graph = "periodic:4:1,2:3";
    s.lambda = 0.2;
    s.replicates = 3;
    s.seed = 2;
    s.horizon = 10.0;
    ExperimentResult res = run_experiment(s);
    CsvTable table = parse_csv(res.csv());
    CHECK(table.rows[0][table.column("graph")] == "periodic:4:1,2:3");
    CHECK(table.rows[0][table.column("degrees")] == "1;2");
}

TEST_CASE("timing flag controls the wall_ms column only") {
    ExperimentSpec s;
    s.kind = ExperimentKind::survival;
    s.graph = "star:3";
    s.lambda = 0.2;
    s.replicates = 5;
    s.seed = 21;
    s.horizon = 50.0;
    ExperimentResult plain = run_experiment(s);
    s.timing = true;
    ExperimentResult timed = run_experiment(s);
    CsvTable pt = parse_csv(plain.csv());
    CsvTable tt = parse_csv(timed.csv());
    int wall = pt.column("wall_ms");
    for (const auto& row : pt.rows) CHECK(row[wall] == "0");
    for (size_t i = 0; i < pt.rows.size(); ++i)
        for (size_t c = 0; c + 1 < pt.rows[i].size(); ++c)  // all but wall_ms agree
            if (int(c) != wall) CHECK(pt.rows[i][c] == tt.rows[i][c]);
}
