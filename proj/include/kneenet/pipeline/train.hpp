#pragma once

#include <vector>

#include <json.hpp>

#include "kneenet/metrics.hpp"
#include "kneenet/model/network.hpp"
#include "kneenet/pipeline/config.hpp"
#include "kneenet/pipeline/prepare.hpp"

namespace kneenet {

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
};

struct TrainHooks {
    AugmentHook on_augment;
};

struct TrainResult {
    Network<float> model;
    std::size_t best_epoch = 0;  // 0: no epoch beat the initialization (or epochs == 0)
    std::vector<EpochLog> history;
    std::vector<PredictionRecord> predictions;  // both splits, from the retained model
    nlohmann::json metrics;
};

/// Exam-level logits of `model` for every case in `data`, eval mode.
/// Row-major cases x tasks.
std::vector<float> predict_logits(const RunConfig& config, const Network<float>& model, const PreparedSplit& data);

/// Prediction records for every case and task of `data`.
std::vector<PredictionRecord> make_predictions(const RunConfig& config, const Network<float>& model,
                                               const PreparedSplit& data);

/// Mean class-weighted BCE over cases (summed over tasks).
double mean_loss(const RunConfig& config, std::span<const float> logits, const PreparedSplit& data,
                 const std::vector<ClassWeights>& weights);

/// Trains from config.seed on already-prepared splits. Keeps the epoch with
/// the lowest validation loss. Nothing is written to disk.
TrainResult train_model(const RunConfig& config, const PreparedSplit& train, const PreparedSplit& valid,
                        const TrainHooks& hooks = {});

/// prepare_split for both splits, train_model, then writes model.ckpt,
/// predictions.csv and metrics.json into config.output_dir.
TrainResult run_training(const RunConfig& config, const TrainHooks& hooks = {});

/// AUC per trained task over the records of data.split, in config.tasks
/// order, with labels taken from `data`.
std::vector<double> auc_by_task(const RunConfig& config, const std::vector<PredictionRecord>& predictions,
                                const PreparedSplit& data);

/// The plane label written into prediction records: the plane name for
/// per-plane configs, "all" for stacked ones.
std::string prediction_plane(const RunConfig& config);

void save_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

}  // namespace kneenet
