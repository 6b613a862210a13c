// Used when the AVX2 variant is not built (non-x86 or KNEENET_ENABLE_AVX2=OFF).
#include "kneenet/simd/kernels.hpp"

namespace kneenet::simd::avx2 {

bool available() { return false; }

void gemm(const GemmShape& s, const float* a, const float* b, float* c, bool accumulate) {
    scalar::gemm(s, a, b, c, accumulate);
}
void gemm(const GemmShape& s, const double* a, const double* b, double* c, bool accumulate) {
    scalar::gemm(s, a, b, c, accumulate);
}
float dot(std::span<const float> x, std::span<const float> y) { return scalar::dot(x, y); }
double dot(std::span<const double> x, std::span<const double> y) { return scalar::dot(x, y); }
void axpy(float alpha, std::span<const float> x, std::span<float> y) { scalar::axpy(alpha, x, y); }
void axpy(double alpha, std::span<const double> x, std::span<double> y) { scalar::axpy(alpha, x, y); }
void clamp(std::span<const double> src, std::span<double> dst, double lo, double hi) {
    scalar::clamp(src, dst, lo, hi);
}

}  // namespace kneenet::simd::avx2
