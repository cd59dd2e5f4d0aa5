#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "harpbd/common.hpp"
#include "harpbd/tensor.hpp"

namespace harpbd {

// Undirected body graph over motion-capture joints. Nodes carry their
// original 1-based ids so that a reduced graph can still address the right
// coordinate columns of a full 22-joint recording.

struct BodyGraph {
    std::vector<int> ids;                    // original ids, ascending
    std::vector<std::string> names;          // parallel to ids
    std::vector<std::pair<int, int>> edges;  // original ids, a < b, unique
    std::vector<std::string> warnings;

    int n() const { return static_cast<int>(ids.size()); }

    int index_of(int id) const {
        auto it = std::lower_bound(ids.begin(), ids.end(), id);
        require(it != ids.end() && *it == id,
                "BodyGraph: unknown node id " + std::to_string(id));
        return static_cast<int>(it - ids.begin());
    }

    bool has_id(int id) const {
        return std::binary_search(ids.begin(), ids.end(), id);
    }
};

/// Symmetric 0/1 adjacency with zero diagonal.
inline Tensor adjacency(const BodyGraph& g) {
    Tensor a({g.n(), g.n()});
    for (auto [u, v] : g.edges) {
        const int i = g.index_of(u), j = g.index_of(v);
        a(i, j) = 1.0;
        a(j, i) = 1.0;
    }
    return a;
}

/// Symmetrically normalized propagation matrix over A + I: entry (i,j) is
/// (A+I)_ij / sqrt(dhat_i * dhat_j) with dhat the row sums of A + I.
inline Tensor propagation(const BodyGraph& g) {
    const int n = g.n();
    Tensor ahat = adjacency(g);
    for (int i = 0; i < n; ++i) ahat(i, i) = 1.0;
    std::vector<double> dhat(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dhat[static_cast<size_t>(i)] += ahat(i, j);
    Tensor p({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            p(i, j) = ahat(i, j) / std::sqrt(dhat[static_cast<size_t>(i)] *
                                             dhat[static_cast<size_t>(j)]);
    return p;
}

/// Row-normalized adjacency: row i is A_i / degree(i); isolated nodes get a
/// zero row, so they contribute no neighbor term.
inline Tensor neighbor_average(const BodyGraph& g) {
    const int n = g.n();
    Tensor a = adjacency(g);
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < n; ++j) deg += a(i, j);
        if (deg == 0.0) continue;
        for (int j = 0; j < n; ++j) a(i, j) /= deg;
    }
    return a;
}

inline bool is_connected(const BodyGraph& g) {
    const int n = g.n();
    if (n == 0) return false;
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (auto [u, v] : g.edges) {
        const int i = g.index_of(u), j = g.index_of(v);
        adj[static_cast<size_t>(i)].push_back(j);
        adj[static_cast<size_t>(j)].push_back(i);
    }
    std::vector<char> seen(static_cast<size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int found = 1;
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (int j : adj[static_cast<size_t>(i)])
            if (!seen[static_cast<size_t>(j)]) {
                seen[static_cast<size_t>(j)] = 1;
                ++found;
                stack.push_back(j);
            }
    }
    return found == n;
}

/// Parse a skeleton description. Node lines are "<id> <name>", edge lines
/// are "edge <a> <b>"; blank lines and lines starting with '#' are skipped.
inline BodyGraph parse_skeleton(std::istream& is, const std::string& where) {
    BodyGraph g;
    std::map<int, std::string> nodes;
    std::set<std::pair<int, int>> edge_set;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> ParseError {
        return ParseError(where + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first) || first[0] == '#') continue;
        if (first == "edge") {
            int a = 0, b = 0;
            if (!(ls >> a >> b)) throw fail("edge line needs two node ids");
            if (a == b) throw fail("self-loop on node " + std::to_string(a));
            if (!nodes.count(a) || !nodes.count(b))
                throw fail("edge references undeclared node");
            auto e = std::minmax(a, b);
            if (!edge_set.insert({e.first, e.second}).second)
                throw fail("duplicate edge");
            continue;
        }
        int id = 0;
        try {
            size_t used = 0;
            id = std::stoi(first, &used);
            if (used != first.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw fail("expected a node id or 'edge', got '" + first + "'");
        }
        if (id <= 0) throw fail("node ids must be positive");
        std::string name;
        if (!(ls >> name)) throw fail("node line needs a name");
        if (!nodes.emplace(id, name).second)
            throw fail("duplicate node id " + std::to_string(id));
    }
    require(!nodes.empty(), where + ": skeleton has no nodes");
    for (const auto& [id, name] : nodes) {
        g.ids.push_back(id);
        g.names.push_back(name);
    }
    g.edges.assign(edge_set.begin(), edge_set.end());
    if (!is_connected(g)) g.warnings.push_back(where + ": skeleton graph is disconnected");
    return g;
}

inline BodyGraph load_skeleton(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is.good()) throw ParseError(path.string() + ": cannot open skeleton file");
    return parse_skeleton(is, path.string());
}

inline BodyGraph parse_skeleton_text(const std::string& text, const std::string& where = "<text>") {
    std::istringstream is(text);
    return parse_skeleton(is, where);
}

/// Built-in 22-joint skeleton: head/neck, chest/spine/pelvis column, two
/// arms (shoulder/elbow/wrist) and two legs (hip/knee/ankle/foot/toe).
inline const char* skeleton22_text() {
    return R"(# 22-joint full-body skeleton
1 head
2 left_shoulder
3 left_elbow
4 left_wrist
5 right_shoulder
6 right_elbow
7 right_wrist
8 neck
9 pelvis
10 left_hip
11 left_knee
12 left_ankle
13 left_foot
14 left_toe
15 right_hip
16 right_knee
17 right_ankle
18 right_foot
19 right_toe
20 spine_lower
21 spine_upper
22 chest
edge 1 8
edge 8 22
edge 22 21
edge 21 20
edge 20 9
edge 2 22
edge 2 3
edge 3 4
edge 5 22
edge 5 6
edge 6 7
edge 9 10
edge 10 11
edge 11 12
edge 12 13
edge 13 14
edge 9 15
edge 15 16
edge 16 17
edge 17 18
edge 18 19
)";
}

inline BodyGraph skeleton22() { return parse_skeleton_text(skeleton22_text(), "skeleton22"); }

/// Remove the listed nodes, processing removals in ascending id order. A
/// removed node of degree exactly 2 has its two neighbors joined so chains
/// stay chains; other degrees simply drop their incident edges. Leaves the
/// survivors' ids untouched. A disconnected result is recorded as a warning.
inline BodyGraph reduce_sensors(const BodyGraph& g, std::vector<int> remove_ids) {
    std::sort(remove_ids.begin(), remove_ids.end());
    remove_ids.erase(std::unique(remove_ids.begin(), remove_ids.end()), remove_ids.end());
    for (int id : remove_ids)
        require(g.has_id(id), "reduce_sensors: unknown node id " + std::to_string(id));
    require(static_cast<int>(remove_ids.size()) <= g.n() - 2,
            "reduce_sensors: at least two nodes must remain");

    std::map<int, std::set<int>> adj;
    for (int id : g.ids) adj[id];
    for (auto [u, v] : g.edges) {
        adj[u].insert(v);
        adj[v].insert(u);
    }
    for (int id : remove_ids) {
        auto& nb = adj.at(id);
        if (nb.size() == 2) {
            const int a = *nb.begin();
            const int b = *std::next(nb.begin());
            adj[a].insert(b);
            adj[b].insert(a);
        }
        for (int other : nb) adj.at(other).erase(id);
        adj.erase(id);
    }

    BodyGraph out;
    for (int id : g.ids)
        if (adj.count(id)) {
            out.ids.push_back(id);
            out.names.push_back(g.names[static_cast<size_t>(g.index_of(id))]);
        }
    for (const auto& [u, nbs] : adj)
        for (int v : nbs)
            if (u < v) out.edges.emplace_back(u, v);
    if (!is_connected(out))
        out.warnings.push_back("reduce_sensors: reduced graph is disconnected");
    return out;
}

enum class SensorSet { Full22, OneSide14, OneSide7, Symmetric7 };

inline const char* sensor_set_name(SensorSet s) {
    switch (s) {
        case SensorSet::Full22: return "full22";
        case SensorSet::OneSide14: return "one_side14";
        case SensorSet::OneSide7: return "one_side7";
        case SensorSet::Symmetric7: return "symmetric7";
    }
    return "?";
}

inline SensorSet parse_sensor_set(const std::string& s) {
    if (s == "full22") return SensorSet::Full22;
    if (s == "one_side14") return SensorSet::OneSide14;
    if (s == "one_side7") return SensorSet::OneSide7;
    if (s == "symmetric7") return SensorSet::Symmetric7;
    throw ConfigError("unknown sensor set '" + s +
                      "' (expected full22, one_side14, one_side7 or symmetric7)");
}

inline std::vector<SensorSet> all_sensor_sets() {
    return {SensorSet::Full22, SensorSet::OneSide14, SensorSet::OneSide7, SensorSet::Symmetric7};
}

/// Apply a named reduction preset to the full 22-joint skeleton layout.
/// one_side14 drops the left arm and left leg; one_side7 then thins the
/// remainder to seven joints; symmetric7 keeps a sparse bilateral set.
inline BodyGraph apply_sensor_set(const BodyGraph& full, SensorSet s) {
    switch (s) {
        case SensorSet::Full22: return full;
        case SensorSet::OneSide14:
            return reduce_sensors(full, {2, 3, 4, 10, 11, 12, 13, 14});
        case SensorSet::OneSide7: {
            BodyGraph half = reduce_sensors(full, {2, 3, 4, 10, 11, 12, 13, 14});
            return reduce_sensors(half, {6, 8, 15, 17, 18, 20, 21});
        }
        case SensorSet::Symmetric7:
            return reduce_sensors(full, {3, 4, 6, 7, 8, 10, 11, 12, 13, 15, 16, 17, 18, 20, 21});
    }
    throw ContractError("apply_sensor_set: bad enum");
}

}  // namespace harpbd
