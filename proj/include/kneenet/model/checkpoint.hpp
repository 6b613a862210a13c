#pragma once

#include <filesystem>

#include <json.hpp>

#include "kneenet/model/network.hpp"

namespace kneenet {

inline constexpr unsigned char kCheckpointVersion = 1;

struct Checkpoint {
    nlohmann::json meta;  // {"model": ModelConfig, "blocks": [...], plus caller-supplied keys}
    Network<float> model;
};

/// Layout: version byte, uint32 LE length of the config JSON, the JSON text,
/// then every state block as little-endian float32 in declaration order.
void save_checkpoint(const std::filesystem::path& path, const Network<float>& model, const nlohmann::json& extra = {});

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kneenet
