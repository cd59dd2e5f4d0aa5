#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "harpbd/common.hpp"
#include "harpbd/tape.hpp"

namespace harpbd {

// Classification losses: categorical cross-entropy, a focal factor that
// down-weights easy samples, and a class-balanced weight derived from the
// effective number of samples. Their product is the CFCC loss. Batch losses
// are sums, not means.

/// Per-class training sample counts (index = class id).
using ClassCounts = std::vector<int64_t>;

inline void validate_counts(const ClassCounts& counts) {
    require(!counts.empty(), "ClassCounts: empty");
    for (int64_t n : counts) require(n >= 1, "ClassCounts: every count must be >= 1");
}

struct LossConfig {
    double gamma = 0.0;       // focal exponent
    double beta = 0.0;        // class-balance parameter
    double eps = 1e-7;        // probability clamp before log
    bool focal_enabled = true;
    bool cb_enabled = true;

    double gamma_eff() const { return focal_enabled ? gamma : 0.0; }
    double beta_eff() const { return cb_enabled ? beta : 0.0; }

    void validate() const {
        require(gamma >= 0.0, "LossConfig: gamma must be >= 0");
        require(beta >= 0.0 && beta < 1.0, "LossConfig: beta must be in [0,1)");
        require(eps > 0.0 && eps < 1.0, "LossConfig: eps must be in (0,1)");
    }
};

inline void check_probs(const std::vector<double>& probs, int truth) {
    require(!probs.empty(), "loss: empty probability vector");
    require(truth >= 0 && truth < static_cast<int>(probs.size()), "loss: truth index out of range");
    double s = 0.0;
    for (double p : probs) s += p;
    require(std::abs(s - 1.0) < 1e-6, "loss: probabilities must sum to 1");
}

inline double cce(const std::vector<double>& probs, int truth, double eps = 1e-7) {
    check_probs(probs, truth);
    const double p = std::min(std::max(probs[static_cast<size_t>(truth)], eps), 1.0);
    return -std::log(p);
}

inline double focal_factor(const std::vector<double>& probs, int truth, double gamma) {
    check_probs(probs, truth);
    require(gamma >= 0.0, "focal_factor: gamma must be >= 0");
    if (gamma == 0.0) return 1.0;
    return std::pow(1.0 - probs[static_cast<size_t>(truth)], gamma);
}

/// (1 - beta) / (1 - beta^n): reciprocal effective number of samples.
inline double cb_weight(int64_t n, double beta) {
    require(n >= 1, "cb_weight: n must be >= 1");
    require(beta >= 0.0 && beta < 1.0, "cb_weight: beta must be in [0,1)");
    if (beta == 0.0) return 1.0;
    // 1 - beta^n computed as -expm1(n log beta) to stay accurate as beta -> 1
    const double denom = -std::expm1(static_cast<double>(n) * std::log(beta));
    return (1.0 - beta) / denom;
}

inline double cfcc(const std::vector<double>& probs, int truth, const ClassCounts& counts,
                   const LossConfig& cfg) {
    cfg.validate();
    validate_counts(counts);
    require(counts.size() == probs.size(), "cfcc: counts/probs size mismatch");
    const double w = cb_weight(counts[static_cast<size_t>(truth)], cfg.beta_eff());
    return w * focal_factor(probs, truth, cfg.gamma_eff()) * cce(probs, truth, cfg.eps);
}

/// Rebindable per-window loss subgraph attached to a probability node.
/// Bind y_onehot to the one-hot truth and cb to the precomputed class weight
/// before each forward pass; loss evaluates to a 1x1 scalar.
struct LossNodes {
    int y_onehot = -1;  // 1 x K leaf
    int cb = -1;        // 1 x 1 leaf
    int loss = -1;      // 1 x 1 output
};

inline LossNodes build_loss(Tape& t, int probs_node, double gamma, double eps,
                            const std::string& tag) {
    require(gamma >= 0.0, "build_loss: gamma must be >= 0");
    require(eps > 0.0 && eps < 1.0, "build_loss: eps must be in (0,1)");
    const int64_t k = t.val(probs_node).cols();
    LossNodes out;
    Tensor y0({1, k});
    y0[0] = 1.0;
    out.y_onehot = t.leaf(std::move(y0), tag + "/y");
    out.cb = t.leaf(Tensor::scalar(1.0), tag + "/cb");
    const int p_truth = t.sum(t.mul(probs_node, out.y_onehot));
    const int ce = t.scale(t.log_op(t.clamp(p_truth, eps, 1.0)), -1.0);
    int term = ce;
    if (gamma > 0.0) {
        const int focal = t.pow_const(t.rsub_const(p_truth, 1.0), gamma);
        term = t.mul(focal, ce);
    }
    out.loss = t.mul(out.cb, term);
    return out;
}

/// Bind the truth side of a loss subgraph for one window.
inline void bind_loss(Tape& t, const LossNodes& nodes, int truth, double cb) {
    Tensor& y = t.leaf_value(nodes.y_onehot);
    y.fill(0.0);
    require(truth >= 0 && truth < static_cast<int>(y.numel()), "bind_loss: truth out of range");
    y[static_cast<size_t>(truth)] = 1.0;
    t.leaf_value(nodes.cb)[0] = cb;
}

/// Precompute per-class cb weights from counts (fixed before training).
inline std::vector<double> cb_weights(const ClassCounts& counts, double beta) {
    validate_counts(counts);
    std::vector<double> w;
    w.reserve(counts.size());
    for (int64_t n : counts) w.push_back(cb_weight(n, beta));
    return w;
}

}  // namespace harpbd
