#include "kneenet/simd/kernels.hpp"

#include <algorithm>

namespace kneenet::simd::scalar {

namespace {

template <class T>
void gemm_impl(const GemmShape& s, const T* a, const T* b, T* c, bool accumulate) {
    for (std::size_t i = 0; i < s.m; ++i) {
        T* crow = c + i * s.ldc;
        if (!accumulate) std::fill(crow, crow + s.n, T(0));
        const T* arow = a + i * s.lda;
        for (std::size_t p = 0; p < s.k; ++p) {
            const T av = arow[p];
            const T* brow = b + p * s.ldb;
            for (std::size_t j = 0; j < s.n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <class T>
T dot_impl(std::span<const T> x, std::span<const T> y) {
    T acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

template <class T>
void axpy_impl(T alpha, std::span<const T> x, std::span<T> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace

void gemm(const GemmShape& s, const float* a, const float* b, float* c, bool accumulate) {
    gemm_impl(s, a, b, c, accumulate);
}
void gemm(const GemmShape& s, const double* a, const double* b, double* c, bool accumulate) {
    gemm_impl(s, a, b, c, accumulate);
}
float dot(std::span<const float> x, std::span<const float> y) { return dot_impl(x, y); }
double dot(std::span<const double> x, std::span<const double> y) { return dot_impl(x, y); }
void axpy(float alpha, std::span<const float> x, std::span<float> y) { axpy_impl(alpha, x, y); }
void axpy(double alpha, std::span<const double> x, std::span<double> y) { axpy_impl(alpha, x, y); }

void clamp(std::span<const double> src, std::span<double> dst, double lo, double hi) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::min(std::max(src[i], lo), hi);
}

}  // namespace kneenet::simd::scalar
