#include "kneenet/model/config.hpp"

#include <set>
#include <string>

#include "kneenet/error.hpp"

namespace kneenet {

void ModelConfig::validate() const {
    if (aggregation == Aggregation::max_over_slices && in_channels != 1 && in_channels != 3)
        throw ConfigError("max_over_slices expects in_channels 1 or 3");
    if (aggregation == Aggregation::stacked_channels && in_channels != 15 && in_channels != 30 && in_channels != 45)
        throw ConfigError("stacked_channels expects 15 slices per plane used (15, 30 or 45 channels)");
    if (out_tasks != 1 && out_tasks != 3) throw ConfigError("out_tasks must be 1 or 3");
    if (stem_filters < 1 || stage_blocks < 1 || stage_count < 1 || stem_stride < 1)
        throw ConfigError("stem_filters, stage_blocks, stage_count and stem_stride must be >= 1");
    if (input_size < 1) throw ConfigError("input_size must be >= 1");
    // Every stride-2 stage needs at least one pixel left.
    std::size_t s = (input_size + 2 - 3) / stem_stride + 1;
    for (std::size_t i = 1; i < stage_count; ++i) s = (s + 2 - 3) / 2 + 1;
    if (s < 1) throw ConfigError("input_size too small for the number of stages");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"in_channels", c.in_channels},
                       {"out_tasks", c.out_tasks},
                       {"stem_filters", c.stem_filters},
                       {"stage_blocks", c.stage_blocks},
                       {"stage_count", c.stage_count},
                       {"stem_stride", c.stem_stride},
                       {"input_size", c.input_size},
                       {"aggregation", c.aggregation == Aggregation::max_over_slices ? "max_over_slices"
                                                                                     : "stacked_channels"}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    static const std::set<std::string> known{"in_channels", "out_tasks",  "stem_filters", "stage_blocks",
                                             "stage_count", "stem_stride", "input_size",   "aggregation"};
    if (!j.is_object()) throw ParseError("model config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ParseError("model config: unknown key '" + k + "'");
    ModelConfig out;
    auto get = [&](const char* key, std::size_t& dst) {
        if (j.contains(key)) dst = j.at(key).get<std::size_t>();
    };
    get("in_channels", out.in_channels);
    get("out_tasks", out.out_tasks);
    get("stem_filters", out.stem_filters);
    get("stage_blocks", out.stage_blocks);
    get("stage_count", out.stage_count);
    get("stem_stride", out.stem_stride);
    get("input_size", out.input_size);
    if (j.contains("aggregation")) {
        const auto a = j.at("aggregation").get<std::string>();
        if (a == "max_over_slices") out.aggregation = Aggregation::max_over_slices;
        else if (a == "stacked_channels") out.aggregation = Aggregation::stacked_channels;
        else throw ParseError("model config: unknown aggregation '" + a + "'");
    }
    c = out;
}

}  // namespace kneenet
