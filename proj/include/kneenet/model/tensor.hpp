#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kneenet {

/// Dense NCHW tensor.
template <class T>
struct Tensor {
    std::size_t n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_), data(n_ * c_ * h_ * w_, fill) {}

    std::size_t plane() const { return h * w; }
    std::size_t item() const { return c * h * w; }
    std::size_t size() const { return data.size(); }

    T* image(std::size_t i) { return data.data() + i * item(); }
    const T* image(std::size_t i) const { return data.data() + i * item(); }
    T* channel(std::size_t i, std::size_t ch) { return data.data() + i * item() + ch * plane(); }
    const T* channel(std::size_t i, std::size_t ch) const { return data.data() + i * item() + ch * plane(); }

    T& operator()(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) {
        return data[((i * c + ch) * h + y) * w + x];
    }
    T operator()(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const {
        return data[((i * c + ch) * h + y) * w + x];
    }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

}  // namespace kneenet
