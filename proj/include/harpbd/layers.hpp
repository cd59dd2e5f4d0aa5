#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "harpbd/bodygraph.hpp"
#include "harpbd/common.hpp"
#include "harpbd/rng.hpp"
#include "harpbd/tape.hpp"
#include "harpbd/tensor.hpp"

namespace harpbd {

// Neural building blocks. Each layer exists as a tape builder (used by the
// training graphs) plus a plain forward wrapper that routes through the same
// builder, so there is exactly one implementation of every formula.

/// Fan-based uniform initialization on [-b, b], b = sqrt(6/(fan_in+fan_out)).
inline Tensor glorot_uniform(int64_t rows, int64_t cols, RngStream& rng) {
    const double b = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t({rows, cols});
    for (int64_t i = 0; i < t.numel(); ++i) t[static_cast<size_t>(i)] = rng.uniform(-b, b);
    return t;
}

// ---- graph convolution ----

struct GcParams {
    bool partitioned = false;
    Tensor w;                 // single-weight mode: C_in x C_out
    Tensor w_self, w_neigh;   // partitioned mode
};

inline GcParams init_gc(int64_t c_in, int64_t c_out, bool partitioned, RngStream& rng) {
    GcParams p;
    p.partitioned = partitioned;
    if (partitioned) {
        p.w_self = glorot_uniform(c_in, c_out, rng);
        p.w_neigh = glorot_uniform(c_in, c_out, rng);
    } else {
        p.w = glorot_uniform(c_in, c_out, rng);
    }
    return p;
}

/// Single-weight form: propagation * X * W. `prop` is a constant N x N leaf.
inline int build_gc(Tape& t, int x, int prop, int w) {
    return t.matmul(t.matmul(prop, x), w);
}

/// Partitioned form: X * W_self + neighbor_average * X * W_neigh. The self
/// subset has cardinality 1; the neighbor subset is averaged over its
/// cardinality, which is what `neighbor_average` rows encode. An isolated
/// node therefore receives no neighbor contribution.
inline int build_gc_partitioned(Tape& t, int x, int neigh, int w_self, int w_neigh) {
    return t.add(t.matmul(x, w_self), t.matmul(t.matmul(neigh, x), w_neigh));
}

inline Tensor gc_forward(const Tensor& x, const BodyGraph& g, const GcParams& p) {
    require(x.rows() == g.n(), "gc_forward: row count does not match graph size");
    Tape t;
    const int xi = t.leaf(x, "x");
    int out;
    if (p.partitioned) {
        const int nb = t.leaf(neighbor_average(g), "neigh");
        out = build_gc_partitioned(t, xi, nb, t.leaf(p.w_self, "w_self"),
                                   t.leaf(p.w_neigh, "w_neigh"));
    } else {
        const int pr = t.leaf(propagation(g), "prop");
        out = build_gc(t, xi, pr, t.leaf(p.w, "w"));
    }
    return t.val(out);
}

// ---- LSTM ----

struct LstmParams {
    Tensor wi, wf, wg, wo;  // (D + H) x H, applied to concat(x, h_prev)
    Tensor bi, bf, bg, bo;  // 1 x H
};

inline LstmParams init_lstm(int64_t d, int64_t h, RngStream& rng) {
    LstmParams p;
    p.wi = glorot_uniform(d + h, h, rng);
    p.wf = glorot_uniform(d + h, h, rng);
    p.wg = glorot_uniform(d + h, h, rng);
    p.wo = glorot_uniform(d + h, h, rng);
    p.bi = Tensor({1, h});
    p.bf = Tensor::full(1, h, 1.0);  // forget-gate bias starts open
    p.bg = Tensor({1, h});
    p.bo = Tensor({1, h});
    return p;
}

struct LstmIds {
    int wi = -1, wf = -1, wg = -1, wo = -1;
    int bi = -1, bf = -1, bg = -1, bo = -1;
};

/// Standard forward LSTM over per-timestep 1 x D input nodes; returns the
/// hidden-state node for every timestep. Gates read concat(x_t, h_{t-1}).
inline std::vector<int> build_lstm(Tape& t, const std::vector<int>& xs, const LstmIds& ids,
                                   int64_t hidden) {
    require(!xs.empty(), "build_lstm: empty input sequence");
    int h_prev = t.leaf(Tensor({1, hidden}), "lstm/h0");
    int c_prev = t.leaf(Tensor({1, hidden}), "lstm/c0");
    std::vector<int> hs;
    hs.reserve(xs.size());
    for (int x : xs) {
        const int xc = t.concat_cols(x, h_prev);
        const int gi = t.sigmoid(t.add(t.matmul(xc, ids.wi), ids.bi));
        const int gf = t.sigmoid(t.add(t.matmul(xc, ids.wf), ids.bf));
        const int gg = t.tanh_op(t.add(t.matmul(xc, ids.wg), ids.bg));
        const int go = t.sigmoid(t.add(t.matmul(xc, ids.wo), ids.bo));
        const int c = t.add(t.mul(gf, c_prev), t.mul(gi, gg));
        const int h = t.mul(go, t.tanh_op(c));
        h_prev = h;
        c_prev = c;
        hs.push_back(h);
    }
    return hs;
}

/// Plain forward pass: returns (T x H hidden stack, final 1 x H hidden).
inline std::pair<Tensor, Tensor> lstm_forward(const Tensor& seq, const LstmParams& p) {
    require(seq.rows() >= 1, "lstm_forward: need at least one timestep");
    const int64_t tsteps = seq.rows(), d = seq.cols(), h = p.wi.cols();
    require(p.wi.rows() == d + h, "lstm_forward: weight shape mismatch");
    Tape t;
    LstmIds ids;
    ids.wi = t.leaf(p.wi, "wi");
    ids.wf = t.leaf(p.wf, "wf");
    ids.wg = t.leaf(p.wg, "wg");
    ids.wo = t.leaf(p.wo, "wo");
    ids.bi = t.leaf(p.bi, "bi");
    ids.bf = t.leaf(p.bf, "bf");
    ids.bg = t.leaf(p.bg, "bg");
    ids.bo = t.leaf(p.bo, "bo");
    std::vector<int> xs;
    for (int64_t r = 0; r < tsteps; ++r) {
        Tensor row({1, d});
        for (int64_t c = 0; c < d; ++c) row[static_cast<size_t>(c)] = seq(r, c);
        xs.push_back(t.leaf(std::move(row)));
    }
    const std::vector<int> hs = build_lstm(t, xs, ids, h);
    Tensor stack({tsteps, h});
    for (int64_t r = 0; r < tsteps; ++r)
        for (int64_t c = 0; c < h; ++c) stack(r, c) = t.val(hs[static_cast<size_t>(r)])[static_cast<size_t>(c)];
    return {stack, t.val(hs.back())};
}

// ---- dropout ----

/// Inverted-dropout mask: entries are 0 with probability p, else 1/(1-p).
inline Tensor dropout_mask(const std::vector<int64_t>& shape, double p, RngStream& rng) {
    require(p >= 0.0 && p < 1.0, "dropout: p must be in [0,1)");
    Tensor m(shape);
    const double keep = 1.0 / (1.0 - p);
    for (int64_t i = 0; i < m.numel(); ++i)
        m[static_cast<size_t>(i)] = rng.uniform() < p ? 0.0 : keep;
    return m;
}

inline Tensor dropout(const Tensor& x, double p, bool training, RngStream& rng) {
    require(p >= 0.0 && p < 1.0, "dropout: p must be in [0,1)");
    if (!training || p == 0.0) return x;
    Tensor m = dropout_mask(x.shape(), p, rng);
    Tensor out(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i)
        out[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] * m[static_cast<size_t>(i)];
    return out;
}

// ---- dense softmax head ----

struct HeadParams {
    Tensor w;  // H x K
    Tensor b;  // 1 x K
};

inline HeadParams init_head(int64_t h, int64_t k, RngStream& rng) {
    HeadParams p;
    p.w = glorot_uniform(h, k, rng);
    p.b = Tensor({1, k});
    return p;
}

inline int build_dense_softmax(Tape& t, int h, int w, int b) {
    return t.softmax(t.add(t.matmul(h, w), b));
}

inline std::vector<double> dense_softmax(const Tensor& h, const HeadParams& p) {
    require(h.rows() == 1 && h.cols() == p.w.rows(), "dense_softmax: shape mismatch");
    Tape t;
    const int out = build_dense_softmax(t, t.leaf(h, "h"), t.leaf(p.w, "w"), t.leaf(p.b, "b"));
    const Tensor& v = t.val(out);
    return {v.values().begin(), v.values().end()};
}

inline int argmax_index(const std::vector<double>& v) {
    require(!v.empty(), "argmax_index: empty");
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<size_t>(i)] > v[static_cast<size_t>(best)]) best = i;
    return best;  // ties keep the lowest index
}

}  // namespace harpbd
