#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "kneenet/augment.hpp"
#include "kneenet/model/tensor.hpp"
#include "kneenet/pipeline/config.hpp"
#include "kneenet/volume.hpp"

namespace kneenet {

/// One exam after slice-count normalization, before augmentation and resize.
struct PreparedCase {
    std::string id;
    std::array<int, 3> labels{-1, -1, -1};  // indexed by Task; -1 when unlabelled
    std::vector<MriVolume> volumes;         // one per RunConfig::planes entry
};

struct PreparedSplit {
    Split split = Split::train;
    std::vector<PreparedCase> cases;  // manifest order
};

/// Loads every case of `split` under config.data_root, applies the resample
/// spec (c41 keeps native slice counts) and attaches the labels of
/// config.tasks. Throws IntegrityError when a case lacks one of those labels.
PreparedSplit prepare_split(const RunConfig& config, Split split);

/// Called once per volume that receives a non-empty transform plan, with the
/// split the volume belongs to and the number of transforms applied.
using AugmentHook = std::function<void(Split, std::size_t)>;

/// Builds the network input for one case. `plans` is empty (no augmentation)
/// or holds one plan per volume. Slices are resized to the model input size.
///   c41: s x 3 x H x W (slice repeated per channel)
///   c42: s x 1 x H x W
///   c43/c44: 1 x (15 * planes) x H x W
Tensor<float> build_input(const RunConfig& config, const PreparedCase& c, Split split,
                          const std::vector<TransformPlan>& plans, const AugmentHook& hook = {});

}  // namespace kneenet
