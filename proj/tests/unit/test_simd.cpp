#include <doctest.h>

#include <cmath>
#include <vector>

#include "kneenet/rng.hpp"
#include "kneenet/simd/kernels.hpp"

using namespace kneenet;

namespace {

template <class T>
std::vector<T> random_vec(Rng& rng, std::size_t n) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
    return v;
}

template <class T>
void check_gemm_equivalence(double tol) {
    Rng rng(7);
    const std::size_t shapes[][3] = {{1, 1, 1},  {6, 16, 9},   {7, 17, 3},  {16, 1024, 144}, {13, 300, 33},
                                     {64, 5, 576}, {3, 257, 2}, {5, 8, 0},  {144, 256, 16}};
    for (const auto& s : shapes) {
        const std::size_t m = s[0], n = s[1], k = s[2];
        const auto a = random_vec<T>(rng, m * k), b = random_vec<T>(rng, k * n);
        for (bool acc : {false, true}) {
            auto c0 = random_vec<T>(rng, m * n);
            auto c1 = c0;
            const simd::GemmShape shape{m, n, k, k, n, n};
            simd::scalar::gemm(shape, a.data(), b.data(), c0.data(), acc);
            simd::avx2::gemm(shape, a.data(), b.data(), c1.data(), acc);
            for (std::size_t i = 0; i < m * n; ++i)
                REQUIRE(std::abs(static_cast<double>(c0[i] - c1[i])) <= tol * (1.0 + static_cast<double>(k)));
        }
    }
}

}  // namespace

TEST_CASE("dispatch reports a supported ISA and can be forced to scalar") {
    const auto detected = simd::detected_isa();
    CHECK(simd::set_isa(simd::Isa::scalar) == simd::Isa::scalar);
    CHECK(simd::active_isa() == simd::Isa::scalar);
    CHECK(simd::set_isa(detected) == detected);
    CHECK(simd::isa_name(simd::Isa::avx2) == "avx2");
}

TEST_CASE("avx2 gemm matches the scalar reference") {
    if (!simd::avx2::available()) return;
    check_gemm_equivalence<float>(1e-5);
    check_gemm_equivalence<double>(1e-13);
}

TEST_CASE("gemm against a naive triple loop with leading dimensions") {
    Rng rng(3);
    const std::size_t m = 5, n = 11, k = 7, lda = 9, ldb = 13, ldc = 12;
    auto a = random_vec<double>(rng, m * lda), b = random_vec<double>(rng, k * ldb);
    std::vector<double> c(m * ldc, 0.0);
    simd::gemm({m, n, k, lda, ldb, ldc}, a.data(), b.data(), c.data(), false);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double ref = 0;
            for (std::size_t p = 0; p < k; ++p) ref += a[i * lda + p] * b[p * ldb + j];
            CHECK(c[i * ldc + j] == doctest::Approx(ref).epsilon(1e-12));
        }
}

TEST_CASE("dot, axpy and clamp variants agree") {
    Rng rng(11);
    for (std::size_t n : {0u, 1u, 7u, 8u, 33u, 1000u}) {
        const auto x = random_vec<double>(rng, n), y = random_vec<double>(rng, n);
        CHECK(simd::scalar::dot(x, y) == doctest::Approx(simd::avx2::dot(x, y)).epsilon(1e-12));
        const auto xf = random_vec<float>(rng, n), yf = random_vec<float>(rng, n);
        CHECK(simd::scalar::dot(xf, yf) == doctest::Approx(simd::avx2::dot(xf, yf)).epsilon(1e-4));

        auto y0 = y, y1 = y;
        simd::scalar::axpy(0.37, x, y0);
        simd::avx2::axpy(0.37, x, y1);
        for (std::size_t i = 0; i < n; ++i) CHECK(y0[i] == doctest::Approx(y1[i]).epsilon(1e-14));

        std::vector<double> c0(n), c1(n);
        simd::scalar::clamp(x, c0, -0.5, 0.25);
        simd::avx2::clamp(x, c1, -0.5, 0.25);
        CHECK(c0 == c1);
    }
}
