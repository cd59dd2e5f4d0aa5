// Brute-force reference implementations used only by tests. Everything here
// is written as plainly as possible, independent of the library's vectorized
// code paths, so the two sides can be compared as implementation oracles.
#pragma once

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "harpbd/bodygraph.hpp"
#include "harpbd/rng.hpp"
#include "harpbd/tensor.hpp"

namespace oracles {

inline std::vector<std::set<int>> neighbor_lists(const harpbd::BodyGraph& g) {
    std::vector<std::set<int>> nb(static_cast<size_t>(g.n()));
    for (auto [u, v] : g.edges) {
        const int i = g.index_of(u), j = g.index_of(v);
        nb[static_cast<size_t>(i)].insert(j);
        nb[static_cast<size_t>(j)].insert(i);
    }
    return nb;
}

// Single-weight graph convolution, one node at a time:
// out[i] = sum over j in {i} ∪ N(i) of (x[j] @ w) / sqrt(dhat_i * dhat_j)
inline harpbd::Tensor gc_pernode_single(const harpbd::Tensor& x, const harpbd::BodyGraph& g,
                                        const harpbd::Tensor& w) {
    const auto nb = neighbor_lists(g);
    const int n = g.n();
    const int64_t cin = x.cols(), cout = w.cols();
    harpbd::Tensor out({n, cout});
    std::vector<double> dhat(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) dhat[static_cast<size_t>(i)] = 1.0 + static_cast<double>(nb[static_cast<size_t>(i)].size());
    for (int i = 0; i < n; ++i) {
        std::set<int> hood = nb[static_cast<size_t>(i)];
        hood.insert(i);
        for (int j : hood) {
            const double norm = std::sqrt(dhat[static_cast<size_t>(i)] * dhat[static_cast<size_t>(j)]);
            for (int64_t c = 0; c < cout; ++c) {
                double acc = 0.0;
                for (int64_t k = 0; k < cin; ++k) acc += x(j, k) * w(k, c);
                out(i, c) += acc / norm;
            }
        }
    }
    return out;
}

// Partitioned graph convolution, one node at a time:
// out[i] = x[i] @ w_self + (1/|N(i)|) * sum_{j in N(i)} x[j] @ w_neigh
inline harpbd::Tensor gc_pernode_partitioned(const harpbd::Tensor& x, const harpbd::BodyGraph& g,
                                             const harpbd::Tensor& w_self,
                                             const harpbd::Tensor& w_neigh) {
    const auto nb = neighbor_lists(g);
    const int n = g.n();
    const int64_t cin = x.cols(), cout = w_self.cols();
    harpbd::Tensor out({n, cout});
    for (int i = 0; i < n; ++i) {
        for (int64_t c = 0; c < cout; ++c) {
            double acc = 0.0;
            for (int64_t k = 0; k < cin; ++k) acc += x(i, k) * w_self(k, c);
            out(i, c) = acc;
        }
        const auto& hood = nb[static_cast<size_t>(i)];
        if (hood.empty()) continue;
        for (int64_t c = 0; c < cout; ++c) {
            double acc = 0.0;
            for (int j : hood)
                for (int64_t k = 0; k < cin; ++k) acc += x(j, k) * w_neigh(k, c);
            out(i, c) += acc / static_cast<double>(hood.size());
        }
    }
    return out;
}

// Random connected-ish graph over n nodes with ids 1..n (text form).
inline std::string random_graph_text(int n, harpbd::RngStream& rng, bool ensure_tree = true) {
    std::string text;
    for (int i = 1; i <= n; ++i) text += std::to_string(i) + " j" + std::to_string(i) + "\n";
    std::set<std::pair<int, int>> edges;
    if (ensure_tree)
        for (int i = 2; i <= n; ++i) {
            const int p = static_cast<int>(rng.uniform_int(1, i - 1));
            edges.insert({std::min(p, i), std::max(p, i)});
        }
    const int extras = static_cast<int>(rng.uniform_int(0, n));
    for (int k = 0; k < extras; ++k) {
        const int a = static_cast<int>(rng.uniform_int(1, n));
        const int b = static_cast<int>(rng.uniform_int(1, n));
        if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
    }
    for (auto [a, b] : edges) text += "edge " + std::to_string(a) + " " + std::to_string(b) + "\n";
    return text;
}

}  // namespace oracles
