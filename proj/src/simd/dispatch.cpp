#include <atomic>
#include <cstdlib>
#include <string>

#include "kneenet/simd/kernels.hpp"

namespace kneenet::simd {

namespace {

Isa initial_isa() {
    Isa isa = avx2::available() ? Isa::avx2 : Isa::scalar;
    if (const char* env = std::getenv("KNEENET_ISA")) {
        const std::string v(env);
        if (v == "scalar") isa = Isa::scalar;
        else if (v == "avx2" && avx2::available()) isa = Isa::avx2;
    }
    return isa;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

bool use_avx2() { return current().load(std::memory_order_relaxed) == Isa::avx2; }

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() { return avx2::available() ? Isa::avx2 : Isa::scalar; }

Isa active_isa() { return current().load(); }

Isa set_isa(Isa isa) {
    if (isa == Isa::avx2 && !avx2::available()) isa = Isa::scalar;
    current().store(isa);
    return isa;
}

void gemm(const GemmShape& s, const float* a, const float* b, float* c, bool accumulate) {
    use_avx2() ? avx2::gemm(s, a, b, c, accumulate) : scalar::gemm(s, a, b, c, accumulate);
}
void gemm(const GemmShape& s, const double* a, const double* b, double* c, bool accumulate) {
    use_avx2() ? avx2::gemm(s, a, b, c, accumulate) : scalar::gemm(s, a, b, c, accumulate);
}
float dot(std::span<const float> x, std::span<const float> y) {
    return use_avx2() ? avx2::dot(x, y) : scalar::dot(x, y);
}
double dot(std::span<const double> x, std::span<const double> y) {
    return use_avx2() ? avx2::dot(x, y) : scalar::dot(x, y);
}
void axpy(float alpha, std::span<const float> x, std::span<float> y) {
    use_avx2() ? avx2::axpy(alpha, x, y) : scalar::axpy(alpha, x, y);
}
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    use_avx2() ? avx2::axpy(alpha, x, y) : scalar::axpy(alpha, x, y);
}
void clamp(std::span<const double> src, std::span<double> dst, double lo, double hi) {
    use_avx2() ? avx2::clamp(src, dst, lo, hi) : scalar::clamp(src, dst, lo, hi);
}

}  // namespace kneenet::simd
