#include "kneenet/model/aggregate.hpp"

#include "kneenet/error.hpp"

namespace kneenet {

template <class T>
MaxResult<T> predict_volume_max(const Network<T>& net, const Tensor<T>& slices) {
    if (slices.n == 0) throw ShapeError("predict_volume_max: empty volume");
    if (net.config().out_tasks != 1) throw ShapeError("predict_volume_max: model must have a single task");
    const auto logits = net.predict(slices);
    return max_over_slices(logits, 0, slices.n);
}

template <class T>
std::vector<T> predict_multi(const Network<T>& net, const Tensor<T>& stacked) {
    if (net.config().aggregation != Aggregation::stacked_channels)
        throw ShapeError("predict_multi: model is not configured for stacked channels");
    if (stacked.n != 1) throw ShapeError("predict_multi: expected a single stacked input");
    auto logits = net.predict(stacked);
    for (auto& z : logits) z = sigmoid(z);
    return logits;
}

template MaxResult<float> predict_volume_max(const Network<float>&, const Tensor<float>&);
template MaxResult<double> predict_volume_max(const Network<double>&, const Tensor<double>&);
template std::vector<float> predict_multi(const Network<float>&, const Tensor<float>&);
template std::vector<double> predict_multi(const Network<double>&, const Tensor<double>&);

}  // namespace kneenet
