#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kneenet/model/loss.hpp"
#include "kneenet/types.hpp"

namespace kneenet {

struct PredictionRecord {
    std::string case_id;
    Task task = Task::acl;
    std::string plane;  // "axial" | "coronal" | "sagittal" | "all" (stacked models) | "combined"
    Split split = Split::valid;
    double probability = 0.5;
};

/// Mann-Whitney AUC with mid-ranks for ties. Throws MetricError unless both
/// classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

/// w_c = N / (2 N_c). Throws MetricError for single-class input.
ClassWeights class_weights(std::span<const int> labels);
ClassWeights class_weights(std::size_t n_pos, std::size_t n_neg);

/// Logistic regression over the three plane probabilities (axial, coronal, sagittal).
struct CombinerModel {
    std::array<double, 3> weights{0.0, 0.0, 0.0};
    double bias = 0.0;
    double lambda = 1e-4;
};

struct LogregFit {
    CombinerModel model;
    bool converged = false;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    double objective = 0.0;
};

/// Objective: mean negative log-likelihood + (lambda / 2) ||w||^2 (bias unpenalized).
double logreg_objective(const CombinerModel& m, std::span<const std::array<double, 3>> x, std::span<const int> y);

/// Damped Newton from the zero model until the gradient norm drops below
/// 1e-8 or 100 iterations elapse (converged = false then).
LogregFit fit_logreg(std::span<const std::array<double, 3>> features, std::span<const int> labels,
                     double lambda = 1e-4);

double predict_logreg(const CombinerModel& m, const std::array<double, 3>& x);

void to_json(nlohmann::json& j, const CombinerModel& m);
void from_json(const nlohmann::json& j, CombinerModel& m);

}  // namespace kneenet
