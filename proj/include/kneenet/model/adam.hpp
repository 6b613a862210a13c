#pragma once

#include <cstdint>
#include <vector>

#include "kneenet/model/network.hpp"

namespace kneenet {

struct AdamHyper {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;  // decoupled
};

template <class T>
struct AdamState {
    AdamHyper hyper;
    std::uint64_t t = 0;
    std::vector<std::vector<T>> m, v;  // aligned with Network::blocks(), empty for buffers

    static AdamState for_model(const Network<T>& net, AdamHyper hyper = {});
};

/// theta <- theta - lr * mhat / (sqrt(vhat) + eps) - lr * wd * theta.
/// Throws OptimizerError (leaving model and state untouched) on non-finite gradients.
template <class T>
void adam_step(AdamState<T>& state, Network<T>& net, const Gradients<T>& grads);

}  // namespace kneenet
