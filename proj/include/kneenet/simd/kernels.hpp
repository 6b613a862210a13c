#pragma once

// Data-parallel inner loops used by the convolution layers and the image
// transforms. Each kernel has a scalar reference implementation and, on x86-64,
// an AVX2/FMA variant; the variant is chosen once at startup from CPUID and can
// be overridden with KNEENET_ISA=scalar|avx2 or set_isa().

#include <cstddef>
#include <span>
#include <string_view>

namespace kneenet::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best instruction set supported by this CPU and build.
Isa detected_isa();

/// Currently dispatched instruction set.
Isa active_isa();

/// Forces dispatch; requesting an unsupported ISA falls back to scalar.
/// Returns the ISA actually selected.
Isa set_isa(Isa isa);

struct GemmShape {
    std::size_t m = 0, n = 0, k = 0;
    std::size_t lda = 0, ldb = 0, ldc = 0;
};

// Row-major C[m x n] (+)= A[m x k] * B[k x n].
void gemm(const GemmShape& s, const float* a, const float* b, float* c, bool accumulate);
void gemm(const GemmShape& s, const double* a, const double* b, double* c, bool accumulate);

float dot(std::span<const float> x, std::span<const float> y);
double dot(std::span<const double> x, std::span<const double> y);

// y += alpha * x
void axpy(float alpha, std::span<const float> x, std::span<float> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// dst[i] = min(max(src[i], lo), hi)
void clamp(std::span<const double> src, std::span<double> dst, double lo, double hi);

/// Explicit per-ISA entry points, for equivalence tests and benchmarks.
namespace scalar {
void gemm(const GemmShape& s, const float* a, const float* b, float* c, bool accumulate);
void gemm(const GemmShape& s, const double* a, const double* b, double* c, bool accumulate);
float dot(std::span<const float> x, std::span<const float> y);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(float alpha, std::span<const float> x, std::span<float> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void clamp(std::span<const double> src, std::span<double> dst, double lo, double hi);
}  // namespace scalar

namespace avx2 {
bool available();
void gemm(const GemmShape& s, const float* a, const float* b, float* c, bool accumulate);
void gemm(const GemmShape& s, const double* a, const double* b, double* c, bool accumulate);
float dot(std::span<const float> x, std::span<const float> y);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(float alpha, std::span<const float> x, std::span<float> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void clamp(std::span<const double> src, std::span<double> dst, double lo, double hi);
}  // namespace avx2

}  // namespace kneenet::simd
