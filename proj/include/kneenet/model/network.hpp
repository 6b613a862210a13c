#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kneenet/model/config.hpp"
#include "kneenet/model/tensor.hpp"
#include "kneenet/rng.hpp"

namespace kneenet {

enum class Mode { train, eval };

/// Named storage block. Trainable blocks are parameters; the rest are
/// batch-norm running statistics.
template <class T>
struct StateBlock {
    std::string name;
    std::vector<T> value;
    bool trainable = true;
};

/// Gradients aligned with Network::blocks(); non-trainable entries are empty.
template <class T>
struct Gradients {
    std::vector<std::vector<T>> blocks;

    void scale(T s);
    bool all_finite() const;
};

namespace detail {

struct ConvLayer {
    std::size_t cin, cout, k, stride, pad;
    std::size_t weight, bias;  // block indices
    std::size_t out_size(std::size_t in) const { return (in + 2 * pad - k) / stride + 1; }
};

struct BnLayer {
    std::size_t channels;
    std::size_t gamma, beta, mean, var;
};

struct ResidualBlock {
    ConvLayer conv1;
    BnLayer bn1;
    ConvLayer conv2;
    BnLayer bn2;
    std::optional<ConvLayer> proj;
    std::optional<BnLayer> proj_bn;
};

template <class T>
struct BnCache {
    Tensor<T> xhat;
    std::vector<T> inv_std;
};

template <class T>
struct BlockCache {
    Tensor<T> input;   // conv1 / projection input
    Tensor<T> hidden;  // relu(bn1(conv1)) = conv2 input
    Tensor<T> output;  // relu(sum), mask for the outer ReLU
    BnCache<T> bn1, bn2, proj_bn;
};

}  // namespace detail

/// Activations retained by a train-mode forward pass.
template <class T>
struct ForwardCache {
    const void* owner = nullptr;
    std::uint64_t version = 0;
    bool valid = false;
    Tensor<T> input;
    Tensor<T> stem_out;  // after ReLU
    detail::BnCache<T> stem_bn;
    std::vector<detail::BlockCache<T>> blocks;
    Tensor<T> features;  // B x C x 1 x 1 after global average pooling
    std::size_t pooled_h = 0, pooled_w = 0;
};

template <class T>
struct ForwardResult {
    std::size_t batch = 0;
    std::size_t tasks = 0;
    std::vector<T> logits;  // batch x tasks
    ForwardCache<T> cache;  // populated in train mode only

    T logit(std::size_t i, std::size_t t = 0) const { return logits[i * tasks + t]; }
};

/// Compact residual CNN: 3x3 stem, `stage_count` stages of `stage_blocks`
/// basic blocks (two 3x3 conv + BN each, identity or 1x1 projection skip),
/// global average pooling and an affine head with `out_tasks` logits.
template <class T>
class Network {
public:
    explicit Network(const ModelConfig& config);

    /// He-normal conv weights, zero biases, unit BN scale.
    static Network init(const ModelConfig& config, Rng& rng);

    const ModelConfig& config() const { return config_; }

    const std::vector<StateBlock<T>>& blocks() const { return blocks_; }
    std::size_t block_count() const { return blocks_.size(); }
    std::span<const T> block(std::size_t i) const { return blocks_[i].value; }
    /// Mutable access invalidates outstanding caches.
    std::span<T> mutable_block(std::size_t i) {
        ++version_;
        return blocks_[i].value;
    }
    std::size_t parameter_count() const;

    /// Train mode normalizes with batch statistics, updates running
    /// statistics and returns a cache for backward; eval mode uses running
    /// statistics and leaves the model untouched.
    ForwardResult<T> forward(const Tensor<T>& x, Mode mode);

    /// Eval-mode forward on an immutable model; safe to call concurrently.
    std::vector<T> predict(const Tensor<T>& x) const;

    /// dlogits is batch x out_tasks. Throws UsageError for a cache from an
    /// eval pass, another model, or a model modified since the forward.
    Gradients<T> backward(const ForwardCache<T>& cache, std::span<const T> dlogits) const;

    Gradients<T> zero_gradients() const;

    /// Element-wise conversion (e.g. float checkpoint into a double model).
    template <class U>
    Network<U> cast() const;

private:
    template <class U>
    friend class Network;

    std::vector<T> run(const Tensor<T>& x, Mode mode, ForwardCache<T>* cache,
                       std::vector<std::pair<std::size_t, std::vector<T>>>* running) const;
    void check_input(const Tensor<T>& x) const;

    std::size_t add_block(std::string name, std::size_t size, T fill, bool trainable);
    detail::ConvLayer add_conv(const std::string& name, std::size_t cin, std::size_t cout, std::size_t k,
                               std::size_t stride, std::size_t pad);
    detail::BnLayer add_bn(const std::string& name, std::size_t channels);

    ModelConfig config_;
    std::vector<StateBlock<T>> blocks_;
    detail::ConvLayer stem_{};
    detail::BnLayer stem_bn_{};
    std::vector<detail::ResidualBlock> res_blocks_;
    std::size_t head_w_ = 0, head_b_ = 0;
    std::uint64_t version_ = 0;
};

extern template class Network<float>;
extern template class Network<double>;

template <class T>
template <class U>
Network<U> Network<T>::cast() const {
    Network<U> out(config_);
    for (std::size_t i = 0; i < blocks_.size(); ++i)
        for (std::size_t j = 0; j < blocks_[i].value.size(); ++j)
            out.blocks_[i].value[j] = static_cast<U>(blocks_[i].value[j]);
    return out;
}

}  // namespace kneenet
