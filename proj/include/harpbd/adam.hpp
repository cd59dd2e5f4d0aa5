#pragma once

#include <cmath>
#include <cstdint>

#include "harpbd/common.hpp"
#include "harpbd/params.hpp"

namespace harpbd {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const {
        require(lr > 0.0, "AdamConfig: lr must be positive");
        require(beta1 >= 0.0 && beta1 < 1.0, "AdamConfig: beta1 must be in [0,1)");
        require(beta2 >= 0.0 && beta2 < 1.0, "AdamConfig: beta2 must be in [0,1)");
        require(eps > 0.0, "AdamConfig: eps must be positive");
    }
};

/// Adam with bias correction. First and second moment estimates are kept per
/// parameter tensor; the step counter advances exactly once per update call.
class Adam {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    const AdamConfig& config() const { return cfg_; }
    int64_t step_count() const { return t_; }

    void step(ParamMap& params, const ParamMap& grads) {
        require(params.size() == grads.size(), "Adam::step: parameter/gradient key mismatch");
        if (m_.empty()) {
            for (const auto& [name, p] : params) {
                m_.emplace(name, Tensor(p.shape()));
                v_.emplace(name, Tensor(p.shape()));
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (auto& [name, p] : params) {
            auto git = grads.find(name);
            require(git != grads.end(), "Adam::step: missing gradient for '" + name + "'");
            const Tensor& g = git->second;
            require(g.same_shape(p), "Adam::step: gradient shape mismatch for '" + name + "'");
            Tensor& m = m_.at(name);
            Tensor& v = v_.at(name);
            const size_t count = static_cast<size_t>(p.numel());
            for (size_t i = 0; i < count; ++i) {
                const double gi = g[i];
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
            if (!p.all_finite())
                throw NumericalError("Adam::step: non-finite parameter '" + name + "'");
        }
    }

  private:
    AdamConfig cfg_;
    int64_t t_ = 0;
    ParamMap m_, v_;
};

}  // namespace harpbd
