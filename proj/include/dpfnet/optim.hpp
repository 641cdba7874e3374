#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dpfnet/errors.hpp"
#include "dpfnet/tape.hpp"
#include "dpfnet/tensor.hpp"

namespace dpfnet {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class S>
struct AdamStateT {
    std::map<std::string, TensorT<S>> m, v;
    std::int64_t t = 0;
};

using AdamState = AdamStateT<float>;

// Bias-corrected Adam over named parameters. Skips parameters with no
// gradient entry; a non-finite gradient aborts the step naming the
// offending parameter.
template <class S>
void adam_step(std::vector<std::pair<std::string, TensorT<S>*>>& params, const GradMap<S>& grads,
               AdamStateT<S>& state, double lr, const AdamConfig& cfg = {}) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        const TensorT<S>& g = git->second;
        if (g.shape != p->shape)
            throw std::invalid_argument("adam_step: gradient shape " + shape_str(g.shape) + " != parameter shape " +
                                        shape_str(p->shape) + " for " + name);
        if (!g.all_finite()) throw NumericError("adam_step: non-finite gradient for parameter " + name);

        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, TensorT<S>(p->shape)).first;
            state.v.emplace(name, TensorT<S>(p->shape));
        }
        TensorT<S>& m = mit->second;
        TensorT<S>& v = state.v.at(name);
        for (std::size_t i = 0; i < p->data.size(); ++i) {
            const double gi = static_cast<double>(g.data[i]);
            const double mi = cfg.beta1 * static_cast<double>(m.data[i]) + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * static_cast<double>(v.data[i]) + (1.0 - cfg.beta2) * gi * gi;
            m.data[i] = static_cast<S>(mi);
            v.data[i] = static_cast<S>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            p->data[i] = static_cast<S>(static_cast<double>(p->data[i]) - lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

// step decay: lr0 * factor^floor(epoch / every)
inline double lr_at_epoch(int epoch, double lr0, int decay_every, double decay_factor) {
    if (epoch < 0) throw std::invalid_argument("lr_at_epoch: negative epoch");
    if (decay_every <= 0) return lr0;
    return lr0 * std::pow(decay_factor, static_cast<double>(epoch / decay_every));
}

}  // namespace dpfnet
