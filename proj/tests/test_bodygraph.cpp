#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "harpbd/bodygraph.hpp"
#include "harpbd/rng.hpp"

using namespace harpbd;

namespace {

BodyGraph path3() {
    return parse_skeleton_text("1 a\n2 b\n3 c\nedge 1 2\nedge 2 3\n", "path3");
}

std::set<int> id_set(const BodyGraph& g) { return {g.ids.begin(), g.ids.end()}; }

}  // namespace

TEST_CASE("propagation matrix of a three-node path") {
    Tensor p = propagation(path3());
    REQUIRE(p(0, 0) == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(p(1, 1) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
    REQUIRE(p(2, 2) == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(p(0, 1) == Catch::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
    REQUIRE(p(0, 2) == 0.0);
}

TEST_CASE("propagation matrix of a two-node graph is uniform") {
    BodyGraph g = parse_skeleton_text("1 a\n2 b\nedge 1 2\n", "pair");
    Tensor p = propagation(g);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) REQUIRE(p(i, j) == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("propagation is symmetric and rescales back to the self-looped adjacency") {
    RngStream rng(RootRng(31).stream("graphs").next_u64());
    for (int trial = 0; trial < 20; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(2, 12));
        std::string text;
        for (int i = 1; i <= n; ++i) text += std::to_string(i) + " j" + std::to_string(i) + "\n";
        std::set<std::pair<int, int>> edges;
        for (int i = 2; i <= n; ++i) {  // random spanning tree plus extras
            const int p = static_cast<int>(rng.uniform_int(1, i - 1));
            edges.insert({std::min(p, i), std::max(p, i)});
        }
        for (int k = 0; k < n / 2; ++k) {
            const int a = static_cast<int>(rng.uniform_int(1, n));
            const int b = static_cast<int>(rng.uniform_int(1, n));
            if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
        }
        for (auto [a, b] : edges)
            text += "edge " + std::to_string(a) + " " + std::to_string(b) + "\n";
        BodyGraph g = parse_skeleton_text(text, "rand");
        Tensor p = propagation(g);
        Tensor a = adjacency(g);
        std::vector<double> dhat(static_cast<size_t>(n), 1.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) dhat[static_cast<size_t>(i)] += a(i, j);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                REQUIRE(p(i, j) == Catch::Approx(p(j, i)).margin(1e-14));
                const double ahat = a(i, j) + (i == j ? 1.0 : 0.0);
                const double back = p(i, j) * std::sqrt(dhat[static_cast<size_t>(i)] *
                                                        dhat[static_cast<size_t>(j)]);
                REQUIRE(back == Catch::Approx(ahat).margin(1e-12));
            }
    }
}

TEST_CASE("neighbor averaging rows sum to one except for isolated nodes") {
    BodyGraph g = parse_skeleton_text("1 a\n2 b\n3 c\n4 d\nedge 1 2\nedge 2 3\n", "iso");
    REQUIRE(!g.warnings.empty());  // node 4 is isolated
    Tensor m = neighbor_average(g);
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += m(i, j);
        if (i == 3)
            REQUIRE(s == 0.0);
        else
            REQUIRE(s == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("skeleton parser reports malformed lines with their line number") {
    REQUIRE_THROWS_AS(parse_skeleton_text("1 a\nedge 1 1\n", "t"), ParseError);
    REQUIRE_THROWS_AS(parse_skeleton_text("1 a\n1 b\n", "t"), ParseError);
    REQUIRE_THROWS_AS(parse_skeleton_text("1 a\nedge 1 9\n", "t"), ParseError);
    REQUIRE_THROWS_AS(parse_skeleton_text("banana\n", "t"), ParseError);
    REQUIRE_THROWS_AS(parse_skeleton_text("1 a\n2 b\nedge 1 2\nedge 2 1\n", "t"), ParseError);
    try {
        parse_skeleton_text("1 a\n2 b\nedge 1 7\n", "myfile");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        REQUIRE(std::string(e.what()).find("myfile:3") != std::string::npos);
    }
}

TEST_CASE("built-in skeleton has 22 joints and a spanning tree of edges") {
    BodyGraph g = skeleton22();
    REQUIRE(g.n() == 22);
    REQUIRE(g.edges.size() == 21);
    REQUIRE(g.warnings.empty());
    REQUIRE(is_connected(g));
    REQUIRE(g.names[g.index_of(9)] == "pelvis");
    REQUIRE(g.names[g.index_of(22)] == "chest");
}

TEST_CASE("degree-two removals re-link their neighbors") {
    BodyGraph g = reduce_sensors(path3(), {2});
    REQUIRE(id_set(g) == std::set<int>{1, 3});
    REQUIRE(g.edges.size() == 1);
    REQUIRE(g.edges[0] == std::pair<int, int>(1, 3));
    REQUIRE(g.warnings.empty());
}

TEST_CASE("degree-one and high-degree removals drop their edges") {
    BodyGraph star = parse_skeleton_text(
        "1 hub\n2 a\n3 b\n4 c\nedge 1 2\nedge 1 3\nedge 1 4\n", "star");
    BodyGraph leaf_gone = reduce_sensors(star, {4});
    REQUIRE(leaf_gone.edges.size() == 2);
    REQUIRE(leaf_gone.warnings.empty());

    BodyGraph hub_gone = reduce_sensors(star, {1});
    REQUIRE(hub_gone.edges.empty());
    REQUIRE(!hub_gone.warnings.empty());  // three isolated survivors
}

TEST_CASE("reduction rejects unknown ids and graph exhaustion") {
    REQUIRE_THROWS_AS(reduce_sensors(path3(), {8}), ContractError);
    REQUIRE_THROWS_AS(reduce_sensors(path3(), {1, 2}), ContractError);
}

TEST_CASE("sensor presets keep the documented joint subsets") {
    BodyGraph full = skeleton22();

    BodyGraph h = apply_sensor_set(full, SensorSet::OneSide14);
    REQUIRE(h.n() == 14);
    REQUIRE(id_set(h) == std::set<int>{1, 5, 6, 7, 8, 9, 15, 16, 17, 18, 19, 20, 21, 22});
    REQUIRE(h.warnings.empty());
    REQUIRE(is_connected(h));

    BodyGraph q = apply_sensor_set(full, SensorSet::OneSide7);
    REQUIRE(q.n() == 7);
    REQUIRE(id_set(q) == std::set<int>{1, 5, 7, 9, 16, 19, 22});
    REQUIRE(is_connected(q));

    BodyGraph s = apply_sensor_set(full, SensorSet::Symmetric7);
    REQUIRE(s.n() == 7);
    REQUIRE(id_set(s) == std::set<int>{1, 2, 5, 9, 14, 19, 22});
    REQUIRE(is_connected(s));

    REQUIRE(apply_sensor_set(full, SensorSet::Full22).n() == 22);
    for (SensorSet set : all_sensor_sets())
        REQUIRE(parse_sensor_set(sensor_set_name(set)) == set);
    REQUIRE_THROWS_AS(parse_sensor_set("nonsense"), ConfigError);
}
