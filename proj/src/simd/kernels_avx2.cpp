// Compiled with -mavx2 -mfma; only entered after a runtime CPUID check.
#include "kneenet/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace kneenet::simd::avx2 {

namespace {

template <class T>
struct Vec;

template <>
struct Vec<float> {
    using Reg = __m256;
    static constexpr std::size_t width = 8;
    static Reg zero() { return _mm256_setzero_ps(); }
    static Reg set1(float v) { return _mm256_set1_ps(v); }
    static Reg load(const float* p) { return _mm256_loadu_ps(p); }
    static void store(float* p, Reg v) { _mm256_storeu_ps(p, v); }
    static Reg fmadd(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
    static Reg add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
    static Reg mul(Reg a, Reg b) { return _mm256_mul_ps(a, b); }
    static float hsum(Reg v) {
        __m128 lo = _mm256_castps256_ps128(v);
        __m128 hi = _mm256_extractf128_ps(v, 1);
        lo = _mm_add_ps(lo, hi);
        __m128 shuf = _mm_movehdup_ps(lo);
        __m128 sums = _mm_add_ps(lo, shuf);
        shuf = _mm_movehl_ps(shuf, sums);
        sums = _mm_add_ss(sums, shuf);
        return _mm_cvtss_f32(sums);
    }
};

template <>
struct Vec<double> {
    using Reg = __m256d;
    static constexpr std::size_t width = 4;
    static Reg zero() { return _mm256_setzero_pd(); }
    static Reg set1(double v) { return _mm256_set1_pd(v); }
    static Reg load(const double* p) { return _mm256_loadu_pd(p); }
    static void store(double* p, Reg v) { _mm256_storeu_pd(p, v); }
    static Reg fmadd(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
    static Reg add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
    static Reg mul(Reg a, Reg b) { return _mm256_mul_pd(a, b); }
    static double hsum(Reg v) {
        __m128d lo = _mm256_castpd256_pd128(v);
        __m128d hi = _mm256_extractf128_pd(v, 1);
        lo = _mm_add_pd(lo, hi);
        __m128d high64 = _mm_unpackhi_pd(lo, lo);
        return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
    }
};

constexpr std::size_t kRows = 6;

// R rows of C, columns [j0, j0 + 2W) in registers, full k sweep.
template <class T, std::size_t R>
inline void tile_2w(const GemmShape& s, const T* a, const T* b, T* c, std::size_t i0, std::size_t j0,
                    bool accumulate) {
    using V = Vec<T>;
    typename V::Reg acc0[R], acc1[R];
    for (std::size_t r = 0; r < R; ++r) {
        if (accumulate) {
            acc0[r] = V::load(c + (i0 + r) * s.ldc + j0);
            acc1[r] = V::load(c + (i0 + r) * s.ldc + j0 + V::width);
        } else {
            acc0[r] = V::zero();
            acc1[r] = V::zero();
        }
    }
    for (std::size_t p = 0; p < s.k; ++p) {
        const T* brow = b + p * s.ldb + j0;
        const auto b0 = V::load(brow);
        const auto b1 = V::load(brow + V::width);
        for (std::size_t r = 0; r < R; ++r) {
            const auto av = V::set1(a[(i0 + r) * s.lda + p]);
            acc0[r] = V::fmadd(av, b0, acc0[r]);
            acc1[r] = V::fmadd(av, b1, acc1[r]);
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        V::store(c + (i0 + r) * s.ldc + j0, acc0[r]);
        V::store(c + (i0 + r) * s.ldc + j0 + V::width, acc1[r]);
    }
}

template <class T, std::size_t R>
inline void tile_1w(const GemmShape& s, const T* a, const T* b, T* c, std::size_t i0, std::size_t j0,
                    bool accumulate) {
    using V = Vec<T>;
    typename V::Reg acc[R];
    for (std::size_t r = 0; r < R; ++r)
        acc[r] = accumulate ? V::load(c + (i0 + r) * s.ldc + j0) : V::zero();
    for (std::size_t p = 0; p < s.k; ++p) {
        const auto bv = V::load(b + p * s.ldb + j0);
        for (std::size_t r = 0; r < R; ++r)
            acc[r] = V::fmadd(V::set1(a[(i0 + r) * s.lda + p]), bv, acc[r]);
    }
    for (std::size_t r = 0; r < R; ++r) V::store(c + (i0 + r) * s.ldc + j0, acc[r]);
}

template <class T, std::size_t R>
inline void tile_tail(const GemmShape& s, const T* a, const T* b, T* c, std::size_t i0, std::size_t j0,
                      bool accumulate) {
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t j = j0; j < s.n; ++j) {
            T acc = accumulate ? c[(i0 + r) * s.ldc + j] : T(0);
            for (std::size_t p = 0; p < s.k; ++p) acc += a[(i0 + r) * s.lda + p] * b[p * s.ldb + j];
            c[(i0 + r) * s.ldc + j] = acc;
        }
    }
}

template <class T, std::size_t R>
void row_block(const GemmShape& s, const T* a, const T* b, T* c, std::size_t i0, std::size_t j0,
               std::size_t j1, bool accumulate) {
    constexpr std::size_t w = Vec<T>::width;
    std::size_t j = j0;
    for (; j + 2 * w <= j1; j += 2 * w) tile_2w<T, R>(s, a, b, c, i0, j, accumulate);
    for (; j + w <= j1; j += w) tile_1w<T, R>(s, a, b, c, i0, j, accumulate);
    if (j < j1) {
        GemmShape tail = s;
        tail.n = j1;
        tile_tail<T, R>(tail, a, b, c, i0, j, accumulate);
    }
}

template <class T>
void gemm_impl(const GemmShape& s, const T* a, const T* b, T* c, bool accumulate) {
    if (s.m == 0 || s.n == 0) return;
    if (s.k == 0) {
        if (!accumulate)
            for (std::size_t i = 0; i < s.m; ++i) std::fill(c + i * s.ldc, c + i * s.ldc + s.n, T(0));
        return;
    }
    // Column panels small enough that the B panel stays cache resident while
    // every row block of A streams past it.
    constexpr std::size_t panel = 256;
    for (std::size_t j0 = 0; j0 < s.n; j0 += panel) {
        const std::size_t j1 = std::min(s.n, j0 + panel);
        std::size_t i = 0;
        for (; i + kRows <= s.m; i += kRows) row_block<T, kRows>(s, a, b, c, i, j0, j1, accumulate);
        switch (s.m - i) {
            case 5: row_block<T, 5>(s, a, b, c, i, j0, j1, accumulate); break;
            case 4: row_block<T, 4>(s, a, b, c, i, j0, j1, accumulate); break;
            case 3: row_block<T, 3>(s, a, b, c, i, j0, j1, accumulate); break;
            case 2: row_block<T, 2>(s, a, b, c, i, j0, j1, accumulate); break;
            case 1: row_block<T, 1>(s, a, b, c, i, j0, j1, accumulate); break;
            default: break;
        }
    }
}

template <class T>
T dot_impl(std::span<const T> x, std::span<const T> y) {
    using V = Vec<T>;
    constexpr std::size_t w = V::width;
    auto acc0 = V::zero(), acc1 = V::zero();
    std::size_t i = 0;
    for (; i + 2 * w <= x.size(); i += 2 * w) {
        acc0 = V::fmadd(V::load(x.data() + i), V::load(y.data() + i), acc0);
        acc1 = V::fmadd(V::load(x.data() + i + w), V::load(y.data() + i + w), acc1);
    }
    T acc = V::hsum(V::add(acc0, acc1));
    for (; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

template <class T>
void axpy_impl(T alpha, std::span<const T> x, std::span<T> y) {
    using V = Vec<T>;
    constexpr std::size_t w = V::width;
    const auto av = V::set1(alpha);
    std::size_t i = 0;
    for (; i + w <= x.size(); i += w)
        V::store(y.data() + i, V::fmadd(av, V::load(x.data() + i), V::load(y.data() + i)));
    for (; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace

bool available() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }

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
    const auto lov = _mm256_set1_pd(lo), hiv = _mm256_set1_pd(hi);
    std::size_t i = 0;
    for (; i + 4 <= src.size(); i += 4) {
        const auto v = _mm256_loadu_pd(src.data() + i);
        _mm256_storeu_pd(dst.data() + i, _mm256_min_pd(_mm256_max_pd(v, lov), hiv));
    }
    for (; i < src.size(); ++i) dst[i] = std::min(std::max(src[i], lo), hi);
}

}  // namespace kneenet::simd::avx2
