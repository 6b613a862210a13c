#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "kneenet/metrics.hpp"
#include "kneenet/pipeline/config.hpp"

namespace kneenet {

struct EvalRequest {
    std::optional<std::filesystem::path> checkpoint;
    std::vector<std::filesystem::path> combine;  // empty or three per-plane checkpoints
    Split split = Split::valid;
    std::optional<std::filesystem::path> data_root;  // overrides the root stored in the checkpoint
};

/// Run configuration stored in a checkpoint written by run_training.
RunConfig checkpoint_run_config(const std::filesystem::path& checkpoint);

/// Per-plane AUC for `checkpoint` and, with `combine`, the three plane AUCs
/// plus the logistic-regression combined AUC (combiner fitted on the
/// checkpoints' combiner_fit_split, scored on `split`).
///
/// Single checkpoint: {"config_id", "task", "plane", "split", "auc", "task_auc"}.
/// Combined: {"task", "split", "planes": [{"plane", "auc"} x3], "combined":
///   {"auc", "fit_split", "combiner", "gradient_norm", "converged"}}.
/// Throws ConfigError for checkpoints that disagree on task or repeat a plane.
nlohmann::json evaluate(const EvalRequest& request);

/// Fits the combiner on `fit` records and scores `score` records. Records are
/// matched by case id; each side must hold one probability per plane and case.
struct CombinedScore {
    LogregFit fit;
    double auc = 0.0;
    std::vector<PredictionRecord> predictions;  // plane "combined", on the scored split
};
CombinedScore combine_planes(const std::vector<PredictionRecord>& fit, const std::map<std::string, int>& fit_labels,
                             const std::vector<PredictionRecord>& score,
                             const std::map<std::string, int>& score_labels, Task task, double lambda = 1e-4);

}  // namespace kneenet
