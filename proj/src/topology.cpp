#include "topology.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "errors.hpp"

namespace cps {

int64_t DegreeSpec::leaf_product() const {
    int64_t p = 1;
    for (int64_t a : degrees) p *= a;
    return p;
}

std::string DegreeSpec::degrees_string(char sep) const {
    std::string s;
    for (size_t i = 0; i < degrees.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(degrees[i]);
    }
    return s;
}

void DegreeSpec::validate(bool need_n) const {
    if (need_n && n < 1) spec_error("degree spec: n must be >= 1, got " + std::to_string(n));
    for (int64_t a : degrees)
        if (a < 1) spec_error("degree spec: every a_i must be >= 1");
}

namespace {

// Offspring count callback signature: level -> children per vertex at that level.
template <typename OffspringFn>
Graph build_tree(OffspringFn offspring, int32_t depth, int64_t vertex_cap,
                 const std::string& what) {
    // Level sizes first, so oversize builds are refused before allocation.
    std::vector<int64_t> level_size;
    level_size.reserve(depth + 1);
    level_size.push_back(1);
    double projected = 1;
    int64_t total = 1;
    for (int32_t lvl = 0; lvl < depth; ++lvl) {
        int64_t off = offspring(lvl);
        projected += static_cast<double>(level_size.back()) * static_cast<double>(off);
        if (projected > static_cast<double>(vertex_cap))
            resource_error(what + ": build would need about " +
                           std::to_string(static_cast<int64_t>(projected)) +
                           " vertices, above the cap of " + std::to_string(vertex_cap));
        int64_t next = level_size.back() * off;
        level_size.push_back(next);
        total += next;
    }

    Graph g;
    g.depth = depth;
    g.parent.assign(total, -1);
    g.level.assign(total, 0);
    g.hub.assign(total, 0);

    // Breadth-first ids: the root is 0, children are numbered level by level
    // scanning parents in id order.
    std::vector<int64_t> level_first(depth + 2, 0);
    for (int32_t lvl = 0; lvl <= depth; ++lvl) level_first[lvl + 1] = level_first[lvl] + level_size[lvl];

    std::vector<int64_t> degree_total(total, 0);
    for (int32_t lvl = 0; lvl < depth; ++lvl) {
        int64_t off = offspring(lvl);
        int64_t next_id = level_first[lvl + 1];
        for (int64_t v = level_first[lvl]; v < level_first[lvl + 1]; ++v) {
            for (int64_t c = 0; c < off; ++c) {
                int64_t u = next_id++;
                g.parent[u] = static_cast<int32_t>(v);
                g.level[u] = lvl + 1;
            }
        }
    }
    for (int64_t v = 1; v < total; ++v) degree_total[g.parent[v]]++;
    for (int64_t v = 1; v < total; ++v) degree_total[v]++;  // parent edge

    g.adj_off.assign(total + 1, 0);
    for (int64_t v = 0; v < total; ++v) g.adj_off[v + 1] = g.adj_off[v] + degree_total[v];
    g.adj.assign(g.adj_off[total], 0);
    std::vector<int64_t> cursor(g.adj_off.begin(), g.adj_off.end() - 1);
    for (int64_t v = 1; v < total; ++v) g.adj[cursor[v]++] = g.parent[v];  // parent slot first
    for (int64_t v = 1; v < total; ++v) g.adj[cursor[g.parent[v]]++] = static_cast<int32_t>(v);
    return g;
}

int64_t periodic_offspring(const DegreeSpec& s, int32_t lvl) {
    int period = s.k() + 1;
    int r = lvl % period;
    return r == 0 ? s.n : s.degrees[r - 1];
}

}  // namespace

Graph build_star(int64_t n) {
    if (n < 1) spec_error("star: leaf count must be >= 1, got " + std::to_string(n));
    DegreeSpec spec{n, {}};
    Graph g = build_tree([&](int32_t) { return n; }, 1, kDefaultVertexCap, "star");
    g.hub[0] = 1;
    g.spec = spec;
    g.spec_string = "star:" + std::to_string(n);
    return g;
}

Graph build_periodic_tree(const DegreeSpec& spec, int32_t depth, int64_t vertex_cap) {
    spec.validate();
    if (depth < 0) spec_error("periodic tree: depth must be >= 0");
    if (spec.k() == 0 && depth > 1)
        spec_error("periodic tree: k = 0 is only valid for the bare star (depth <= 1)");
    Graph g = build_tree([&](int32_t lvl) { return periodic_offspring(spec, lvl); }, depth,
                         vertex_cap, "periodic tree");
    int period = spec.k() + 1;
    for (int64_t v = 0; v < g.vertex_count(); ++v)
        if (g.level[v] % period == 0) g.hub[v] = 1;
    g.spec = spec;
    g.spec_string = "periodic:" + std::to_string(spec.n) + ":" + spec.degrees_string() + ":" +
                    std::to_string(depth);
    return g;
}

Graph build_pinned_subtree(const DegreeSpec& spec) {
    DegreeSpec s = spec;
    s.n = 1;  // rho has the single subtree root below it
    s.validate(false);
    if (s.k() < 1) spec_error("pinned subtree: need at least one degree a_1");
    int32_t depth = s.k() + 1;
    Graph g = build_tree(
        [&](int32_t lvl) { return lvl == 0 ? int64_t{1} : s.degrees[lvl - 1]; }, depth,
        kDefaultVertexCap, "pinned subtree");
    g.pin_target = 0;
    g.spec = s;
    g.spec.n = 0;  // no hub row in a pinned build
    g.spec_string = "pinned:" + s.degrees_string();
    return g;
}

GraphStats graph_stats(const Graph& g) {
    GraphStats st;
    st.vertices = g.vertex_count();
    st.level_sizes.assign(g.depth + 1, 0);
    for (int64_t v = 0; v < st.vertices; ++v) {
        st.level_sizes[g.level[v]]++;
        if (g.hub[v]) st.hub_count++;
        if (g.child_count(static_cast<int32_t>(v)) == 0) st.leaf_count++;
    }
    st.big_n = std::max<int64_t>(g.spec.n, 1) * g.spec.leaf_product();
    return st;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

int64_t parse_int(const std::string& s, const std::string& what) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        spec_error("graph spec: bad " + what + " '" + s + "'");
    return v;
}

std::vector<int64_t> parse_degrees(const std::string& s) {
    std::vector<int64_t> out;
    if (s.empty()) return out;
    for (const auto& part : split(s, ',')) out.push_back(parse_int(part, "degree"));
    return out;
}

}  // namespace

Graph parse_graph_spec(const std::string& s, int64_t vertex_cap) {
    auto parts = split(s, ':');
    if (parts.empty()) spec_error("graph spec: empty string");
    const std::string& kind = parts[0];
    if (kind == "star") {
        if (parts.size() != 2) spec_error("graph spec: expected star:<n>");
        return build_star(parse_int(parts[1], "n"));
    }
    if (kind == "periodic") {
        if (parts.size() != 4) spec_error("graph spec: expected periodic:<n>:<a1,...,ak>:<depth>");
        DegreeSpec spec;
        spec.n = parse_int(parts[1], "n");
        spec.degrees = parse_degrees(parts[2]);
        return build_periodic_tree(spec, static_cast<int32_t>(parse_int(parts[3], "depth")),
                                   vertex_cap);
    }
    if (kind == "pinned") {
        if (parts.size() != 2) spec_error("graph spec: expected pinned:<a1,...,ak>");
        DegreeSpec spec;
        spec.degrees = parse_degrees(parts[1]);
        return build_pinned_subtree(spec);
    }
    spec_error("graph spec: unknown kind '" + kind + "'");
}

}  // namespace cps
