#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "errors.hpp"
#include "topology.hpp"

using namespace cps;

namespace {

// Per-level offspring implied by the construction, recomputed from scratch.
void check_level_recursion(const Graph& g) {
    GraphStats st = graph_stats(g);
    for (int32_t lvl = 0; lvl < g.depth; ++lvl) {
        int64_t children_total = 0;
        for (int64_t v = 0; v < g.vertex_count(); ++v)
            if (g.level[v] == lvl) children_total += g.child_count(static_cast<int32_t>(v));
        CHECK(children_total == st.level_sizes[lvl + 1]);
    }
}

void check_parent_child_symmetry(const Graph& g) {
    int roots = 0;
    for (int32_t v = 0; v < g.vertex_count(); ++v) {
        if (g.parent[v] < 0) {
            ++roots;
            continue;
        }
        bool found = false;
        for (int32_t u : g.children(g.parent[v]))
            if (u == v) found = true;
        CHECK(found);
        CHECK(g.level[v] == g.level[g.parent[v]] + 1);
    }
    CHECK(roots == 1);
    for (int32_t v = 0; v < g.vertex_count(); ++v)
        for (int32_t u : g.children(v)) CHECK(g.parent[u] == v);
}

}  // namespace

TEST_CASE("star builds") {
    Graph g = build_star(3);
    CHECK(g.vertex_count() == 4);
    GraphStats st = graph_stats(g);
    CHECK(st.level_sizes == std::vector<int64_t>{1, 3});
    CHECK(st.hub_count == 1);
    CHECK(g.degree(0) == 3);

    CHECK(build_star(1).vertex_count() == 2);

    Graph big = build_star(100);
    CHECK(big.vertex_count() == 101);
    CHECK(big.degree(big.root) == 100);

    CHECK_THROWS_AS(build_star(0), Error);
}

TEST_CASE("periodic tree level sizes") {
    DegreeSpec s32{3, {2}};
    Graph g = build_periodic_tree(s32, 2);
    GraphStats st = graph_stats(g);
    CHECK(st.level_sizes == std::vector<int64_t>{1, 3, 6});
    CHECK(st.vertices == 10);
    CHECK(st.big_n == 6);

    CHECK(build_periodic_tree(s32, 0).vertex_count() == 1);

    DegreeSpec s412{4, {1, 2}};
    Graph t = build_periodic_tree(s412, 3);
    GraphStats st2 = graph_stats(t);
    CHECK(st2.level_sizes == std::vector<int64_t>{1, 4, 4, 8});
    CHECK(st2.vertices == 17);
    CHECK(st2.big_n == 8);
    // level-3 vertices sit on a hub row even though truncated
    for (int32_t v = 0; v < t.vertex_count(); ++v) {
        if (t.level[v] == 3) CHECK(t.hub[v] == 1);
        if (t.level[v] == 1 || t.level[v] == 2) CHECK(t.hub[v] == 0);
    }
    CHECK(t.hub[t.root] == 1);
}

TEST_CASE("periodic tree rejects oversized builds with the projected count") {
    DegreeSpec s{100, {100}};
    try {
        build_periodic_tree(s, 4);
        FAIL("expected a resource error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::resource);
        CHECK(std::string(e.what()).find("vertices") != std::string::npos);
    }
}

TEST_CASE("pinned subtree shapes") {
    Graph g = build_pinned_subtree(DegreeSpec{0, {2}});
    CHECK(g.vertex_count() == 4);
    CHECK(g.pin_target == 0);
    CHECK(g.depth == 2);

    Graph path = build_pinned_subtree(DegreeSpec{0, {1, 1}});
    CHECK(path.vertex_count() == 4);
    for (int32_t v = 0; v < 4; ++v) CHECK(path.degree(v) <= 2);

    CHECK(build_pinned_subtree(DegreeSpec{0, {2, 3}}).vertex_count() == 10);
}

TEST_CASE("stats N and hubs") {
    CHECK(graph_stats(build_star(5)).big_n == 5);
    CHECK(graph_stats(build_star(5)).hub_count == 1);
    CHECK(graph_stats(build_periodic_tree(DegreeSpec{4, {1, 2}}, 3)).big_n == 8);
}

TEST_CASE("structural invariants hold on assorted builds") {
    for (const char* spec : {"star:7", "periodic:3:2:4", "periodic:4:1,2:6", "pinned:2,3"}) {
        Graph g = parse_graph_spec(spec);
        check_level_recursion(g);
        check_parent_child_symmetry(g);
    }
}

TEST_CASE("identical specs produce identical numbering") {
    Graph a = parse_graph_spec("periodic:3:2,2:4");
    Graph b = parse_graph_spec("periodic:3:2,2:4");
    CHECK(a.parent == b.parent);
    CHECK(a.level == b.level);
    CHECK(a.adj == b.adj);
}

TEST_CASE("graph spec grammar") {
    CHECK(parse_graph_spec("star:9").spec_string == "star:9");
    CHECK(parse_graph_spec("periodic:3:2,1:3").spec_string == "periodic:3:2,1:3");
    CHECK(parse_graph_spec("pinned:2,3").spec_string == "pinned:2,3");
    for (const char* bad : {"", "star", "star:x", "periodic:3:2", "ring:5", "pinned:", "star:-2"}) {
        try {
            parse_graph_spec(bad);
            FAIL("expected a spec error for ", bad);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::spec);
        }
    }
}

TEST_CASE("k = 0 only for the bare star") {
    DegreeSpec s{4, {}};
    CHECK(build_periodic_tree(s, 1).vertex_count() == 5);
    CHECK_THROWS_AS(build_periodic_tree(s, 2), Error);
}
