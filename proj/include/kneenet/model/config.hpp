#pragma once

#include <cstddef>

#include <json.hpp>

namespace kneenet {

enum class Aggregation { max_over_slices, stacked_channels };

struct ModelConfig {
    std::size_t in_channels = 1;
    std::size_t out_tasks = 1;
    std::size_t stem_filters = 16;
    std::size_t stage_blocks = 2;  // residual blocks per stage
    std::size_t stage_count = 3;   // channels double (and resolution halves) per stage
    std::size_t stem_stride = 2;
    std::size_t input_size = 64;
    Aggregation aggregation = Aggregation::max_over_slices;

    void validate() const;
    std::size_t stage_channels(std::size_t stage) const { return stem_filters << stage; }
    std::size_t feature_channels() const { return stage_channels(stage_count - 1); }
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace kneenet
