#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cps {

inline constexpr int64_t kDefaultVertexCap = 5'000'000;

// Offspring profile (n, a_1, ..., a_k): hubs get n children, a vertex i
// levels below a hub gets a_i children, and the pattern repeats with
// period k+1.
struct DegreeSpec {
    int64_t n = 0;                 // hub offspring count
    std::vector<int64_t> degrees;  // a_1 .. a_k

    int k() const { return static_cast<int>(degrees.size()); }
    int64_t leaf_product() const;  // a_1 * ... * a_k (1 when k = 0)
    std::string degrees_string(char sep = ',') const;
    void validate(bool need_n = true) const;
};

// Finite rooted tree with breadth-first vertex ids. Immutable once built.
struct Graph {
    std::vector<int32_t> parent;  // -1 at the root
    std::vector<int32_t> level;   // distance from the root
    std::vector<uint8_t> hub;     // marks hub positions (by level rule, even when truncated)
    // Neighbor lists in CSR form; per vertex: parent first (if any), then children in id order.
    std::vector<int32_t> adj;
    std::vector<int64_t> adj_off;
    int32_t root = 0;
    int32_t depth = 0;       // deepest level
    int32_t pin_target = -1; // rho for pinned builds, else -1
    DegreeSpec spec;
    std::string spec_string; // grammar form that reproduces this graph

    int64_t vertex_count() const { return static_cast<int64_t>(parent.size()); }

    std::span<const int32_t> neighbors(int32_t v) const {
        return {adj.data() + adj_off[v], static_cast<size_t>(adj_off[v + 1] - adj_off[v])};
    }
    int32_t degree(int32_t v) const { return static_cast<int32_t>(adj_off[v + 1] - adj_off[v]); }
    std::span<const int32_t> children(int32_t v) const {
        auto nb = neighbors(v);
        return parent[v] >= 0 ? nb.subspan(1) : nb;
    }
    int64_t child_count(int32_t v) const { return static_cast<int64_t>(children(v).size()); }
};

struct GraphStats {
    int64_t vertices = 0;
    std::vector<int64_t> level_sizes;
    int64_t hub_count = 0;
    int64_t leaf_count = 0;
    int64_t big_n = 0;  // n * a_1 * ... * a_k
};

// Star with n leaves; the root is the unique hub.
Graph build_star(int64_t n);

// Periodic tree truncated `depth` levels below the root. depth = k gives the
// height-k truncation; depth = m(k+1) puts hub rows every k+1 levels.
Graph build_periodic_tree(const DegreeSpec& spec, int32_t depth,
                          int64_t vertex_cap = kDefaultVertexCap);

// Subtree (a_1,...,a_k) with an extra vertex rho attached above its root;
// rho is the pin target and carries level 0.
Graph build_pinned_subtree(const DegreeSpec& spec);

GraphStats graph_stats(const Graph& g);

// Grammar: "star:<n>" | "periodic:<n>:<a1,...,ak>:<depth>" | "pinned:<a1,...,ak>"
Graph parse_graph_spec(const std::string& s, int64_t vertex_cap = kDefaultVertexCap);

}  // namespace cps
