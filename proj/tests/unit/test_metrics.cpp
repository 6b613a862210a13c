#include <doctest.h>

#include <cmath>
#include <vector>

#include "kneenet/error.hpp"
#include "kneenet/metrics.hpp"
#include "kneenet/rng.hpp"

using namespace kneenet;

namespace {

// Pairwise definition: P(score_pos > score_neg) + 0.5 P(equal).
double auc_bruteforce(const std::vector<double>& s, const std::vector<int>& y) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                den += 1;
                num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
            }
    return num / den;
}

}  // namespace

TEST_CASE("auc hand example") {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> y{0, 0, 1, 1};
    CHECK(auc(s, y) == doctest::Approx(0.75));
    CHECK_THROWS_AS(auc(s, std::vector<int>{1, 1, 1, 1}), MetricError);
    CHECK_THROWS_AS(auc(s, std::vector<int>{0, 1}), ShapeError);
}

TEST_CASE("auc matches the pairwise oracle, including ties") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_int(0, 60);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial % 2 ? std::round(rng.uniform() * 5) / 5 : rng.uniform();
            y[i] = rng.bernoulli(0.4) ? 1 : 0;
        }
        y[0] = 0;
        y[1] = 1;
        CHECK(auc(s, y) == doctest::Approx(auc_bruteforce(s, y)).epsilon(1e-12));
    }
}

TEST_CASE("auc properties") {
    Rng rng(12);
    std::vector<double> s(50), t(50), neg(50);
    std::vector<int> y(50), flipped(50);
    for (std::size_t i = 0; i < 50; ++i) {
        s[i] = rng.uniform();
        y[i] = i % 3 == 0;
        flipped[i] = 1 - y[i];
        t[i] = std::exp(3 * s[i]) - 7;
        neg[i] = -s[i];
    }
    const double a = auc(s, y);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(auc(t, y) == doctest::Approx(a));
    CHECK(auc(neg, y) == doctest::Approx(1 - a));
    CHECK(auc(s, flipped) == doctest::Approx(1 - a));
    CHECK(auc(std::vector<double>(50, 0.3), y) == doctest::Approx(0.5));
}

TEST_CASE("class weights for the full cohort counts") {
    // 1370 exams: 1104 abnormal, 319 ACL, 508 meniscus.
    const auto abn = class_weights(1104, 266);
    CHECK(abn.w_pos == doctest::Approx(1370.0 / 2208.0));
    CHECK(abn.w_pos == doctest::Approx(0.6204).epsilon(1e-4));
    CHECK(abn.w_neg == doctest::Approx(2.5752).epsilon(1e-4));
    const auto acl = class_weights(319, 1051);
    CHECK(acl.w_pos == doctest::Approx(2.1473).epsilon(1e-4));
    CHECK(acl.w_neg == doctest::Approx(0.6518).epsilon(1e-4));
    const auto men = class_weights(508, 862);
    CHECK(men.w_pos == doctest::Approx(1.3484).epsilon(1e-4));
    CHECK(men.w_neg == doctest::Approx(0.7947).epsilon(1e-4));
    for (std::size_t p : {1104u, 319u, 508u}) {
        const auto w = class_weights(p, 1370 - p);
        CHECK(std::abs(p * w.w_pos - 685.0) < 1e-9);
        CHECK(std::abs((1370 - p) * w.w_neg - 685.0) < 1e-9);
    }
    CHECK_THROWS_AS(class_weights(std::vector<int>{1, 1}), MetricError);
    const auto from_labels = class_weights(std::vector<int>{1, 0, 0, 0});
    CHECK(from_labels.w_pos == doctest::Approx(2.0));
    CHECK(from_labels.w_neg == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("logistic combiner") {
    Rng rng(13);
    std::vector<std::array<double, 3>> x;
    std::vector<int> y;
    for (int i = 0; i < 300; ++i) {
        const int label = rng.bernoulli(0.35);
        const double shift = label ? 0.25 : 0.0;
        x.push_back({0.3 + shift + 0.2 * rng.normal(), 0.4 + 0.5 * shift + 0.2 * rng.normal(), 0.5 + 0.2 * rng.normal()});
        y.push_back(label);
    }
    const auto fit = fit_logreg(x, y);
    CHECK(fit.converged);
    CHECK(fit.gradient_norm < 1e-8);
    CHECK(fit.model.weights[0] > fit.model.weights[2]);

    // Stationarity checked independently by central differences of the objective.
    const double h = 1e-6;
    for (int k = 0; k < 4; ++k) {
        auto plus = fit.model, minus = fit.model;
        double& a = k < 3 ? plus.weights[k] : plus.bias;
        double& b = k < 3 ? minus.weights[k] : minus.bias;
        a += h;
        b -= h;
        CHECK(std::abs((logreg_objective(plus, x, y) - logreg_objective(minus, x, y)) / (2 * h)) < 1e-6);
    }
    // Perturbing away from the optimum only increases the objective.
    auto off = fit.model;
    off.weights[1] += 0.05;
    CHECK(logreg_objective(off, x, y) > fit.objective);

    // Ranking does not depend on the bias.
    std::vector<double> s1, s2;
    auto shifted = fit.model;
    shifted.bias += 3.0;
    for (const auto& r : x) {
        s1.push_back(predict_logreg(fit.model, r));
        s2.push_back(predict_logreg(shifted, r));
    }
    CHECK(auc(s1, y) == doctest::Approx(auc(s2, y)));

    // Uninformative features: weights stay near zero, bias near the log-odds.
    std::vector<std::array<double, 3>> constant(100, {0.5, 0.5, 0.5});
    std::vector<int> half(100);
    for (int i = 0; i < 100; ++i) half[i] = i < 25;
    const auto null_fit = fit_logreg(constant, half);
    CHECK(null_fit.converged);
    CHECK(predict_logreg(null_fit.model, constant[0]) == doctest::Approx(0.25).epsilon(1e-6));

    nlohmann::json j = fit.model;
    const auto back = j.get<CombinerModel>();
    CHECK(back.weights == fit.model.weights);
    CHECK(back.bias == fit.model.bias);
}
