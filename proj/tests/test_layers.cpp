#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "harpbd/layers.hpp"
#include "oracles.hpp"

using namespace harpbd;

namespace {

Tensor random_tensor(int64_t r, int64_t c, RngStream& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t({r, c});
    for (int64_t i = 0; i < t.numel(); ++i) t[static_cast<size_t>(i)] = rng.uniform(lo, hi);
    return t;
}

Tensor eye(int64_t n) {
    Tensor t({n, n});
    for (int64_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

}  // namespace

TEST_CASE("graph convolution on an isolated node with identity weights is the identity") {
    BodyGraph g = parse_skeleton_text("1 only\n", "one");
    REQUIRE(propagation(g)(0, 0) == 1.0);
    GcParams p;
    p.w = eye(3);
    Tensor x({1, 3}, {0.4, -1.2, 7.0});
    Tensor out = gc_forward(x, g, p);
    for (size_t i = 0; i < 3; ++i) REQUIRE(out[i] == Catch::Approx(x[i]).epsilon(1e-15));
}

TEST_CASE("graph convolution on a two-node edge averages features") {
    BodyGraph g = parse_skeleton_text("1 a\n2 b\nedge 1 2\n", "pair");
    GcParams p;
    p.w = eye(3);
    Tensor x({2, 3}, {1, 0, 0, 0, 1, 0});
    Tensor out = gc_forward(x, g, p);
    REQUIRE(out(0, 0) == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(out(0, 1) == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(out(0, 2) == 0.0);
    REQUIRE(out(1, 0) == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(out(1, 1) == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(out(1, 2) == 0.0);
}

TEST_CASE("vectorized graph convolution matches the per-node loop on random graphs") {
    RootRng root(61);
    for (uint64_t rep = 0; rep < 25; ++rep) {
        RngStream rng(root.stream("gcvec/" + std::to_string(rep)).next_u64());
        const int n = static_cast<int>(rng.uniform_int(2, 22));
        BodyGraph g = parse_skeleton_text(oracles::random_graph_text(n, rng), "rand");
        const int64_t cin = rng.uniform_int(1, 6), cout = rng.uniform_int(1, 6);
        Tensor x = random_tensor(n, cin, rng);

        GcParams single;
        single.w = random_tensor(cin, cout, rng);
        Tensor a = gc_forward(x, g, single);
        Tensor b = oracles::gc_pernode_single(x, g, single.w);
        for (int64_t i = 0; i < a.numel(); ++i)
            REQUIRE(std::abs(a[static_cast<size_t>(i)] - b[static_cast<size_t>(i)]) <= 1e-10);

        GcParams part;
        part.partitioned = true;
        part.w_self = random_tensor(cin, cout, rng);
        part.w_neigh = random_tensor(cin, cout, rng);
        Tensor c = gc_forward(x, g, part);
        Tensor d = oracles::gc_pernode_partitioned(x, g, part.w_self, part.w_neigh);
        for (int64_t i = 0; i < c.numel(); ++i)
            REQUIRE(std::abs(c[static_cast<size_t>(i)] - d[static_cast<size_t>(i)]) <= 1e-10);
    }
}

TEST_CASE("partitioned convolution ignores neighbors of an isolated node") {
    BodyGraph g = parse_skeleton_text("1 a\n2 b\n3 c\nedge 1 2\n", "iso");
    RngStream rng(RootRng(67).stream("gciso").next_u64());
    GcParams p;
    p.partitioned = true;
    p.w_self = random_tensor(3, 4, rng);
    p.w_neigh = random_tensor(3, 4, rng);
    Tensor x = random_tensor(3, 3, rng);
    Tensor out = gc_forward(x, g, p);
    // node index 2 (id 3) is isolated: out row = x row * w_self only
    for (int64_t c = 0; c < 4; ++c) {
        double expect = 0.0;
        for (int64_t k = 0; k < 3; ++k) expect += x(2, k) * p.w_self(k, c);
        REQUIRE(out(2, c) == Catch::Approx(expect).margin(1e-14));
    }
}

TEST_CASE("graph convolution commutes with node relabeling") {
    RngStream rng(RootRng(71).stream("gcperm").next_u64());
    // original path 1-2-3-4 and a relabeled copy 4-2-3-1 of the same shape:
    // mapping old->new: 1->4, 2->2, 3->3, 4->1
    BodyGraph g1 = parse_skeleton_text("1 a\n2 b\n3 c\n4 d\nedge 1 2\nedge 2 3\nedge 3 4\n", "p1");
    BodyGraph g2 = parse_skeleton_text("1 d\n2 b\n3 c\n4 a\nedge 4 2\nedge 2 3\nedge 3 1\n", "p2");
    const int perm[4] = {3, 1, 2, 0};  // row index in g2 ordering for g1 node i
    GcParams p;
    p.w = random_tensor(3, 5, rng);
    Tensor x1 = random_tensor(4, 3, rng);
    Tensor x2({4, 3});
    for (int i = 0; i < 4; ++i)
        for (int64_t c = 0; c < 3; ++c) x2(perm[i], c) = x1(i, c);
    Tensor o1 = gc_forward(x1, g1, p);
    Tensor o2 = gc_forward(x2, g2, p);
    for (int i = 0; i < 4; ++i)
        for (int64_t c = 0; c < 5; ++c)
            REQUIRE(o1(i, c) == Catch::Approx(o2(perm[i], c)).margin(1e-12));
}

TEST_CASE("lstm with all-zero parameters emits all-zero hidden states") {
    LstmParams p;
    const int64_t d = 4, h = 3;
    p.wi = Tensor({d + h, h});
    p.wf = Tensor({d + h, h});
    p.wg = Tensor({d + h, h});
    p.wo = Tensor({d + h, h});
    p.bi = Tensor({1, h});
    p.bf = Tensor({1, h});
    p.bg = Tensor({1, h});
    p.bo = Tensor({1, h});
    RngStream rng(RootRng(73).stream("lstm0").next_u64());
    auto [stack, last] = lstm_forward(random_tensor(6, d, rng), p);
    for (int64_t i = 0; i < stack.numel(); ++i) REQUIRE(stack[static_cast<size_t>(i)] == 0.0);
    for (int64_t i = 0; i < last.numel(); ++i) REQUIRE(last[static_cast<size_t>(i)] == 0.0);
}

TEST_CASE("a one-timestep lstm equals a hand-rolled single cell step") {
    RngStream rng(RootRng(79).stream("lstm1").next_u64());
    const int64_t d = 3, h = 2;
    LstmParams p = init_lstm(d, h, rng);
    Tensor x = random_tensor(1, d, rng);
    auto [stack, last] = lstm_forward(x, p);
    REQUIRE(stack.rows() == 1);
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (int64_t j = 0; j < h; ++j) {
        // h_prev = 0, so the concat input is (x, 0) and only the x block matters
        double zi = p.bi(0, j), zf = p.bf(0, j), zg = p.bg(0, j), zo = p.bo(0, j);
        for (int64_t k = 0; k < d; ++k) {
            zi += x(0, k) * p.wi(k, j);
            zf += x(0, k) * p.wf(k, j);
            zg += x(0, k) * p.wg(k, j);
            zo += x(0, k) * p.wo(k, j);
        }
        const double c = sig(zi) * std::tanh(zg);  // f gate multiplies c_prev = 0
        (void)zf;
        const double expect = sig(zo) * std::tanh(c);
        REQUIRE(last(0, j) == Catch::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("lstm parameters pass finite-difference checks") {
    RootRng root(83);
    for (uint64_t rep = 0; rep < 3; ++rep) {
        RngStream rng(root.stream("lstmfd/" + std::to_string(rep)).next_u64());
        const int64_t d = 4, h = 3, tsteps = 5;
        Tape t;
        LstmIds ids;
        ids.wi = t.param(glorot_uniform(d + h, h, rng), "wi");
        ids.wf = t.param(glorot_uniform(d + h, h, rng), "wf");
        ids.wg = t.param(glorot_uniform(d + h, h, rng), "wg");
        ids.wo = t.param(glorot_uniform(d + h, h, rng), "wo");
        ids.bi = t.param(Tensor({1, h}), "bi");
        ids.bf = t.param(Tensor::full(1, h, 1.0), "bf");
        ids.bg = t.param(Tensor({1, h}), "bg");
        ids.bo = t.param(Tensor({1, h}), "bo");
        std::vector<int> xs;
        for (int64_t r = 0; r < tsteps; ++r) xs.push_back(t.leaf(random_tensor(1, d, rng)));
        const std::vector<int> hs = build_lstm(t, xs, ids, h);
        int loss = t.sum(t.mul(hs.back(), hs.back()));
        t.forward();
        for (int pid : t.param_ids()) REQUIRE(t.fd_check(loss, pid) < 1e-4);
    }
}

TEST_CASE("dropout is the identity when disabled and preserves scale when active") {
    RngStream rng(RootRng(89).stream("drop").next_u64());
    Tensor x = random_tensor(10, 10, rng);
    Tensor same = dropout(x, 0.0, true, rng);
    REQUIRE(same.bitwise_equal(x));
    Tensor infer = dropout(x, 0.5, false, rng);
    REQUIRE(infer.bitwise_equal(x));

    Tensor ones = Tensor::full(1000, 1000, 1.0);
    Tensor dropped = dropout(ones, 0.5, true, rng);
    double mean = 0.0;
    int zeros = 0;
    for (int64_t i = 0; i < dropped.numel(); ++i) {
        const double v = dropped[static_cast<size_t>(i)];
        REQUIRE((v == 0.0 || v == 2.0));
        mean += v;
        zeros += v == 0.0;
    }
    mean /= static_cast<double>(dropped.numel());
    REQUIRE(std::abs(mean - 1.0) < 0.01);
    REQUIRE(zeros > 490000);
    REQUIRE(zeros < 510000);
}

TEST_CASE("dense softmax head anchors") {
    HeadParams zero;
    zero.w = Tensor({3, 2});
    zero.b = Tensor({1, 2});
    auto p = dense_softmax(Tensor({1, 3}, {5.0, -2.0, 0.3}), zero);
    REQUIRE(p[0] == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(p[1] == Catch::Approx(0.5).epsilon(1e-12));

    HeadParams big;
    big.w = eye(2);
    big.b = Tensor({1, 2});
    auto q = dense_softmax(Tensor({1, 2}, {1000.0, 0.0}), big);
    REQUIRE(q[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(q[1] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(q[0] + q[1] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("softmax is invariant to constant logit shifts") {
    RngStream rng(RootRng(97).stream("shift").next_u64());
    for (int rep = 0; rep < 20; ++rep) {
        Tensor z = random_tensor(1, 6, rng, -3.0, 3.0);
        const double c = rng.uniform(-50.0, 50.0);
        Tape t1, t2;
        int a = t1.softmax(t1.leaf(z));
        Tensor zc = z;
        for (size_t i = 0; i < 6; ++i) zc[i] += c;
        int b = t2.softmax(t2.leaf(zc));
        for (size_t i = 0; i < 6; ++i)
            REQUIRE(t1.val(a)[i] == Catch::Approx(t2.val(b)[i]).margin(1e-12));
    }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    REQUIRE(argmax_index({0.2, 0.5, 0.5, 0.1}) == 1);
    REQUIRE(argmax_index({0.5, 0.5}) == 0);
    REQUIRE(argmax_index({1.0}) == 0);
}
