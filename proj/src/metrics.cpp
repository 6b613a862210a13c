#include "kneenet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "kneenet/error.hpp"

namespace kneenet {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        // Ranks i+1 .. j+1 share their mean.
        const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]]) rank_sum_pos += mid;
        i = j + 1;
    }
    for (int l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw MetricError("auc: undefined without both classes");
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

ClassWeights class_weights(std::size_t n_pos, std::size_t n_neg) {
    if (n_pos == 0 || n_neg == 0) throw MetricError("class_weights: both classes must be present");
    const double n = static_cast<double>(n_pos + n_neg);
    return {n / (2.0 * static_cast<double>(n_pos)), n / (2.0 * static_cast<double>(n_neg))};
}

ClassWeights class_weights(std::span<const int> labels) {
    std::size_t pos = 0;
    for (int l : labels) pos += l ? 1 : 0;
    return class_weights(pos, labels.size() - pos);
}

namespace {

double log1pexp(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

double predict_logreg(const CombinerModel& m, const std::array<double, 3>& x) {
    return sigmoid(m.bias + m.weights[0] * x[0] + m.weights[1] * x[1] + m.weights[2] * x[2]);
}

double logreg_objective(const CombinerModel& m, std::span<const std::array<double, 3>> x, std::span<const int> y) {
    double nll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = m.bias + m.weights[0] * x[i][0] + m.weights[1] * x[i][1] + m.weights[2] * x[i][2];
        nll += log1pexp(z) - (y[i] ? z : 0.0);
    }
    const double w2 = m.weights[0] * m.weights[0] + m.weights[1] * m.weights[1] + m.weights[2] * m.weights[2];
    return nll / static_cast<double>(x.size()) + 0.5 * m.lambda * w2;
}

LogregFit fit_logreg(std::span<const std::array<double, 3>> features, std::span<const int> labels, double lambda) {
    if (features.size() != labels.size()) throw ShapeError("fit_logreg: features and labels differ in length");
    if (features.size() < 4) throw MetricError("fit_logreg: need at least 4 samples");
    if (!(lambda >= 0.0)) throw MetricError("fit_logreg: lambda must be nonnegative");
    std::size_t pos = 0;
    for (int l : labels) pos += l ? 1 : 0;
    if (pos == 0 || pos == labels.size()) throw MetricError("fit_logreg: both classes must be present");

    const auto n = static_cast<double>(features.size());
    // Parameter vector (w_axial, w_coronal, w_sagittal, bias).
    Eigen::Vector4d theta = Eigen::Vector4d::Zero();
    auto to_model = [&](const Eigen::Vector4d& t) {
        return CombinerModel{{t[0], t[1], t[2]}, t[3], lambda};
    };

    LogregFit fit;
    for (std::size_t iter = 0; iter <= 100; ++iter) {
        Eigen::Vector4d grad = Eigen::Vector4d::Zero();
        Eigen::Matrix4d hess = Eigen::Matrix4d::Zero();
        for (std::size_t i = 0; i < features.size(); ++i) {
            const Eigen::Vector4d xi(features[i][0], features[i][1], features[i][2], 1.0);
            const double p = sigmoid(theta.dot(xi));
            grad += (p - (labels[i] ? 1.0 : 0.0)) * xi;
            hess += std::max(p * (1.0 - p), 1e-12) * xi * xi.transpose();
        }
        grad /= n;
        hess /= n;
        for (int k = 0; k < 3; ++k) {
            grad[k] += lambda * theta[k];
            hess(k, k) += lambda;
        }
        fit.gradient_norm = grad.norm();
        fit.iterations = iter;
        if (fit.gradient_norm < 1e-8) {
            fit.converged = true;
            break;
        }
        if (iter == 100) break;

        // A tiny ridge on the bias keeps the system solvable when lambda = 0 and the data separate.
        Eigen::Matrix4d h = hess;
        h(3, 3) += 1e-12;
        const Eigen::Vector4d step = h.ldlt().solve(grad);
        const double f0 = logreg_objective(to_model(theta), features, labels);
        double t = 1.0;
        Eigen::Vector4d next = theta - step;
        while (logreg_objective(to_model(next), features, labels) > f0 - 1e-4 * t * grad.dot(step) && t > 1e-10) {
            t *= 0.5;
            next = theta - t * step;
        }
        theta = next;
    }
    fit.model = to_model(theta);
    fit.objective = logreg_objective(fit.model, features, labels);
    return fit;
}

void to_json(nlohmann::json& j, const CombinerModel& m) {
    j = nlohmann::json{{"weights", {m.weights[0], m.weights[1], m.weights[2]}}, {"bias", m.bias}, {"lambda", m.lambda}};
}

void from_json(const nlohmann::json& j, CombinerModel& m) {
    const auto& w = j.at("weights");
    if (!w.is_array() || w.size() != 3) throw ParseError("combiner: weights must have 3 entries");
    CombinerModel out;
    for (std::size_t i = 0; i < 3; ++i) out.weights[i] = w[i].get<double>();
    out.bias = j.at("bias").get<double>();
    out.lambda = j.value("lambda", 1e-4);
    for (double v : {out.weights[0], out.weights[1], out.weights[2], out.bias, out.lambda})
        if (!std::isfinite(v)) throw ParseError("combiner: non-finite value");
    m = out;
}

}  // namespace kneenet
