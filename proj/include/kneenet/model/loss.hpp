#pragma once

#include <algorithm>
#include <cmath>

namespace kneenet {

template <class T>
T sigmoid(T z) {
    if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
}

/// Per-class loss scale, w_c = N / (2 N_c).
struct ClassWeights {
    double w_pos = 1.0;
    double w_neg = 1.0;

    double of(int label) const { return label ? w_pos : w_neg; }
};

template <class T>
struct LossGrad {
    T loss;
    T dlogit;
};

/// -w [y ln p + (1 - y) ln(1 - p)] with p = sigmoid(logit), evaluated in the
/// stable form w (softplus(z) - y z). Gradient w.r.t. the logit is w (p - y).
template <class T>
LossGrad<T> weighted_bce(T logit, int label, T weight) {
    const T y = label ? T(1) : T(0);
    const T softplus = std::max(logit, T(0)) + std::log1p(std::exp(-std::abs(logit)));
    return {weight * (softplus - y * logit), weight * (sigmoid(logit) - y)};
}

}  // namespace kneenet
