#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kneenet/augment.hpp"
#include "kneenet/model/adam.hpp"
#include "kneenet/model/config.hpp"
#include "kneenet/resample.hpp"
#include "kneenet/types.hpp"

namespace kneenet {

/// c41: per-slice network, variable slice count, max over slices, one volume per step.
/// c42: per-slice network on a fixed slice count, volumes batched.
/// c43: all three planes stacked as 45 channels, one task.
/// c44: as c43 with one logit per task.
enum class ConfigId { c41, c42, c43, c44 };

/// How per-slice logits become an exam logit for c41/c42.
enum class SlicePooling { max, mean };

std::string_view to_string(ConfigId id);
std::string_view to_string(SlicePooling p);

struct RunConfig {
    ConfigId config_id = ConfigId::c42;
    std::vector<Task> tasks{Task::meniscus};
    std::vector<Plane> planes{Plane::sagittal};
    ResampleSpec resample;
    AugmentationPolicy augmentation;
    ModelConfig model;
    AdamHyper optimizer;
    SlicePooling slice_pooling = SlicePooling::mean;
    std::size_t epochs = 10;
    std::size_t batch_size = 4;  // volumes per optimizer step
    std::uint64_t seed = 0;
    Split combiner_fit_split = Split::train;
    std::filesystem::path data_root;
    std::filesystem::path output_dir;

    /// Throws ConfigError when the configuration breaks its config_id's invariants.
    void validate() const;

    bool stacked() const { return config_id == ConfigId::c43 || config_id == ConfigId::c44; }
};

/// Defaults for each configuration; data_root and output_dir are left empty.
RunConfig default_config(ConfigId id);

void to_json(nlohmann::json& j, const RunConfig& c);
/// Unknown keys are rejected. Missing keys take default_config(config_id) values.
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace kneenet
