#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "cpsim.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
    std::string out = s ? s : "";
    cps_string_free(s);
    return out;
}

}  // namespace

TEST_CASE("graph lifecycle and stats") {
    cps_graph* g = nullptr;
    REQUIRE(cps_graph_create("periodic:4:1,2:3", &g) == CPS_OK);
    char* out = nullptr;
    REQUIRE(cps_graph_stats_json(g, &out) == CPS_OK);
    json j = json::parse(take(out));
    CHECK(j["vertices"] == 17);
    CHECK(j["N"] == 8);
    CHECK(j["hub_count"] == 9);
    cps_graph_destroy(g);
}

TEST_CASE("error codes and messages") {
    cps_graph* g = nullptr;
    CHECK(cps_graph_create("ring:5", &g) == CPS_ERR_SPEC);
    CHECK(std::strlen(cps_last_error()) > 0);
    CHECK(cps_graph_create("periodic:100:100:4", &g) == CPS_ERR_RESOURCE);
    CHECK(cps_graph_create(nullptr, &g) == CPS_ERR_SPEC);
}

TEST_CASE("simulate json") {
    cps_graph* g = nullptr;
    REQUIRE(cps_graph_create("star:3", &g) == CPS_OK);
    char* out = nullptr;
    REQUIRE(cps_simulate_json(g, R"({"lambda":0.0,"seed":5})", &out) == CPS_OK);
    json j = json::parse(take(out));
    CHECK(j["extinct"] == true);
    CHECK(j["extinction_time"].get<double>() > 0);

    CHECK(cps_simulate_json(g, R"({"seed":5})", &out) == CPS_ERR_SPEC);  // no lambda
    CHECK(cps_simulate_json(g, R"({"lambda":0.2,"init":[99]})", &out) == CPS_ERR_SPEC);

    REQUIRE(cps_simulate_json(
                g, R"({"lambda":0.4,"horizon":25,"init":"root","pins":"root","probes":[25],"stop_when_empty":false})",
                &out) == CPS_OK);
    json p = json::parse(take(out));
    CHECK(p["probe_root"][0] == 1);
    cps_graph_destroy(g);
}

TEST_CASE("event log export") {
    cps_graph* g = nullptr;
    REQUIRE(cps_graph_create("star:2", &g) == CPS_OK);
    char* out = nullptr;
    REQUIRE(cps_eventlog_text(g, 0.5, 4.0, 9, &out) == CPS_OK);
    std::string text = take(out);
    CHECK(text.rfind("t ", 0) == 0);
    cps_graph_destroy(g);
}

TEST_CASE("bounds eval") {
    char* out = nullptr;
    REQUIRE(cps_bounds_eval_json("push_probability_lower", R"({"lambda":0.1,"k":1})", &out) ==
            CPS_OK);
    json j = json::parse(take(out));
    CHECK(j["values"]["exact"].get<double>() == doctest::Approx(1.658644e-4).epsilon(1e-5));
    CHECK(cps_bounds_eval_json("nope", "{}", &out) == CPS_ERR_SPEC);
}

TEST_CASE("oracle endpoints") {
    char* out = nullptr;
    REQUIRE(cps_oracle_star_json(1, 0.7, R"({"j":1})", &out) == CPS_OK);
    json j = json::parse(take(out));
    CHECK(j["E_T00"]["from_state"].get<double>() == doctest::Approx(1.85).epsilon(1e-8));

    REQUIRE(cps_oracle_graph_json("star:5", 1.0, R"({"mode":"stationary","pins":"root"})", &out) ==
            CPS_OK);
    json st = json::parse(take(out));
    CHECK(st["marginals"][1].get<double>() == doctest::Approx(0.5).epsilon(1e-9));

    REQUIRE(cps_oracle_graph_json("star:2", 0.5, R"({"mode":"extinction","init":"all"})", &out) ==
            CPS_OK);
    json ext = json::parse(take(out));
    CHECK(ext["E_tau"].get<double>() > 1.0);

    REQUIRE(cps_oracle_graph_json("star:1", 0.1, R"({"mode":"paths","from":0,"to":1,"max_len":3})",
                                  &out) == CPS_OK);
    json paths = json::parse(take(out));
    CHECK(paths["walks"].size() == 2);

    CHECK(cps_oracle_graph_json("star:2", 0.5, R"({"mode":"wat"})", &out) == CPS_ERR_SPEC);
}

TEST_CASE("experiment run and report through the C surface") {
    auto csv = (std::filesystem::temp_directory_path() / "capi_exp.csv").string();
    json spec = {{"kind", "survival"}, {"graph", "star:3"},     {"lambda", 0.3},
                 {"replicates", 50},   {"seed", 123},           {"horizon", 100.0},
                 {"output", csv},      {"id", "capi-demo"}};
    char* out = nullptr;
    REQUIRE(cps_experiment_run(spec.dump().c_str(), &out) == CPS_OK);
    json summary = json::parse(take(out));
    CHECK(summary["replicates"] == 50);
    CHECK(summary["seed_derivation"].get<std::string>().find("splitmix64") != std::string::npos);

    // header is stable, bit for bit
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "experiment_id,kind,graph,n,k,degrees,lambda,c,delta,eta,seed,replicate,outcome,tau,"
          "censored,hits,frozen_total,wall_ms");

    char* rep = nullptr;
    REQUIRE(cps_report_csv(csv.c_str(), "json", nullptr, 0, &rep) == CPS_OK);
    json r = json::parse(take(rep));
    CHECK(r["files"][0]["count"] == 50);

    CHECK(cps_experiment_run("{\"kind\":\"survival\"}", &out) == CPS_ERR_SPEC);
    std::filesystem::remove(csv);
    std::filesystem::remove(csv + ".summary.json");
}

TEST_CASE("audit experiment through the C surface") {
    json spec = {{"kind", "duality-audit"}, {"graph", "star:4"}, {"lambda", 0.5},
                 {"replicates", 100},       {"seed", 31},        {"horizon", 2.5}};
    char* out = nullptr;
    REQUIRE(cps_experiment_run(spec.dump().c_str(), &out) == CPS_OK);
    json j = json::parse(take(out));
    CHECK(j["audit"]["pass"] == true);
    CHECK(j["audit"]["violations"] == 0);
}

TEST_CASE("version string") { CHECK(std::string(cps_version()) == "0.1.0"); }
