#pragma once

#include <cstddef>
#include <vector>

#include "kneenet/model/loss.hpp"
#include "kneenet/model/network.hpp"

namespace kneenet {

template <class T>
struct MaxResult {
    T probability;
    std::size_t argmax;  // first slice attaining the maximum
};

/// Index of the largest probability in [first, first + count), lowest index on ties.
template <class T>
MaxResult<T> max_over_slices(const std::vector<T>& logits, std::size_t first, std::size_t count) {
    MaxResult<T> best{sigmoid(logits[first]), 0};
    for (std::size_t i = 1; i < count; ++i) {
        const T p = sigmoid(logits[first + i]);
        if (p > best.probability) best = {p, i};
    }
    return best;
}

/// Exam probability = max over per-slice sigmoid(logit), eval mode.
/// `slices` is s x C x H x W. Throws ShapeError when s == 0 or out_tasks != 1.
template <class T>
MaxResult<T> predict_volume_max(const Network<T>& net, const Tensor<T>& slices);

/// Independent per-task sigmoids for a 1 x C x H x W stacked input.
template <class T>
std::vector<T> predict_multi(const Network<T>& net, const Tensor<T>& stacked);

}  // namespace kneenet
