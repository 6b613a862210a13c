#include "kneenet/model/adam.hpp"

#include <cmath>

#include "kneenet/error.hpp"

namespace kneenet {

template <class T>
AdamState<T> AdamState<T>::for_model(const Network<T>& net, AdamHyper hyper) {
    AdamState s;
    s.hyper = hyper;
    const auto& blocks = net.blocks();
    s.m.resize(blocks.size());
    s.v.resize(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (!blocks[i].trainable) continue;
        s.m[i].assign(blocks[i].value.size(), T(0));
        s.v[i].assign(blocks[i].value.size(), T(0));
    }
    return s;
}

template <class T>
void adam_step(AdamState<T>& state, Network<T>& net, const Gradients<T>& grads) {
    const auto& blocks = net.blocks();
    if (grads.blocks.size() != blocks.size() || state.m.size() != blocks.size())
        throw ShapeError("adam_step: gradient/state layout does not match the model");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (!blocks[i].trainable) continue;
        if (grads.blocks[i].size() != blocks[i].value.size() || state.m[i].size() != blocks[i].value.size())
            throw ShapeError("adam_step: shape mismatch in block " + blocks[i].name);
    }
    if (!grads.all_finite()) throw OptimizerError("adam_step: non-finite gradient, step refused");

    const auto& h = state.hyper;
    state.t += 1;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
    const T b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (!blocks[i].trainable) continue;
        auto theta = net.mutable_block(i);
        auto& m = state.m[i];
        auto& v = state.v[i];
        const auto& g = grads.blocks[i];
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m[k] = b1 * m[k] + (T(1) - b1) * g[k];
            v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
            const double mhat = static_cast<double>(m[k]) / bc1;
            const double vhat = static_cast<double>(v[k]) / bc2;
            const double old = static_cast<double>(theta[k]);
            theta[k] = static_cast<T>(old - h.lr * mhat / (std::sqrt(vhat) + h.eps) - h.lr * h.weight_decay * old);
        }
    }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(AdamState<float>&, Network<float>&, const Gradients<float>&);
template void adam_step<double>(AdamState<double>&, Network<double>&, const Gradients<double>&);

}  // namespace kneenet
