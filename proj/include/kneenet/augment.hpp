#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kneenet/rng.hpp"
#include "kneenet/volume.hpp"

namespace kneenet {

enum class ChannelMode { three_channel, single_channel };

/// Staged augmentation policy: a horizontal flip, then one intensity transform,
/// then one local-contrast/texture transform, then one crop, each stage active
/// with probability p. Baseline extras (rotation, pixel shift) are optional
/// trailing stages with the same probability.
struct AugmentationPolicy {
    double p = 0.0;
    ChannelMode channel_mode = ChannelMode::three_channel;
    bool baseline_extras = false;
    std::size_t crop_size = 150;

    void validate() const;
};

namespace xform {

struct HorizontalFlip {};
struct Contrast { double alpha; };              // U[-0.2, 0.2]
struct Gamma { double gamma; };                 // U[0.8, 1.2]
struct Brightness { double beta; };             // U[-0.2, 0.2]
struct Clahe { double clip_limit = 2.0; std::size_t grid = 8; };
struct Sharpen { double amount; };              // U[0.2, 0.5]
struct EmbossOverlay { double strength; double alpha; };  // U[0.2, 0.7], U[0.2, 0.5]
struct BrightnessContrast { double alpha; double beta; }; // U[-0.2, 0.2] each
struct CenterCrop { std::size_t size; };
// Offsets are fractions in [0, 1) mapped onto the valid positions of the slice being cropped.
struct RandomCrop { std::size_t size; double u_top; double u_left; };
struct Rotate { double degrees; };              // U[-25, 25]
struct Shift { double dy; double dx; };         // U[-25, 25] pixels

}  // namespace xform

using Transform = std::variant<xform::HorizontalFlip, xform::Contrast, xform::Gamma, xform::Brightness, xform::Clahe,
                               xform::Sharpen, xform::EmbossOverlay, xform::BrightnessContrast, xform::CenterCrop,
                               xform::RandomCrop, xform::Rotate, xform::Shift>;

std::string transform_name(const Transform& t);

struct PlannedTransform {
    std::size_t stage;  // 1-based stage index
    Transform transform;
};

/// One realization of a policy; applying it is deterministic.
struct TransformPlan {
    std::vector<PlannedTransform> steps;

    bool empty() const { return steps.empty(); }
    bool stage_active(std::size_t stage) const;
};

/// Members available per stage for the given policy (stage 1 .. 4, plus 5/6 for extras).
std::vector<std::vector<std::string>> stage_members(const AugmentationPolicy& policy);

TransformPlan sample_plan(const AugmentationPolicy& policy, Rng& rng);

/// Applies one transform to one slice. Output clipped to [0, 1]; crops keep
/// the cropped size (apply_plan resizes back).
Image apply_transform(const Image& image, const Transform& t);

/// Applies the plan to every slice with identical parameters; crops are
/// resized back to the pre-crop slice size.
MriVolume apply_plan(const MriVolume& vol, const TransformPlan& plan);

/// Contrast-limited adaptive histogram equalization on a [0,1] image.
/// clip_limit is a multiple of the uniform bin height; 256 bins.
Image clahe(const Image& image, double clip_limit, std::size_t grid);

void to_json(nlohmann::json& j, const AugmentationPolicy& p);
void from_json(const nlohmann::json& j, AugmentationPolicy& p);

}  // namespace kneenet
