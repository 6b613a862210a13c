#pragma once

#include <cstdint>
#include <filesystem>

#include "kneenet/dataset.hpp"

namespace kneenet {

struct SyntheticSpec {
    std::size_t cases = 200;
    std::uint64_t seed = 0;
    std::size_t size = 64;  // slice height and width
    double valid_fraction = 0.2;
    std::array<double, 3> prevalence{0.233, 0.371, 0.806};  // indexed by Task
};

/// Writes `<out>/<split>/<plane>/<id>.npy` (uint8, s x size x size with
/// s ~ uniform{17..61}) and `<out>/<split>-<task>.csv`. Positive cases carry
/// a bright task-specific ellipsoid centred in the middle third of the slice
/// axis. Ids are four-digit, training ids first. Deterministic per spec.
std::array<DatasetManifest, 2> generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out);

}  // namespace kneenet
