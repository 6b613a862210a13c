#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kneenet/types.hpp"

namespace kneenet {

/// One exam's stack of 2D slices for a single plane, intensities in [0, 1].
///
/// Data is slice-major: data[(i * height + h) * width + w].
struct MriVolume {
    std::string case_id;
    Plane plane = Plane::axial;
    std::size_t slices = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;
    bool resliced = false;  // set after reslice_horizontal, toggled back on the second call

    MriVolume() = default;
    MriVolume(std::string id, Plane p, std::size_t s, std::size_t h, std::size_t w, double fill = 0.0)
        : case_id(std::move(id)), plane(p), slices(s), height(h), width(w), data(s * h * w, fill) {}

    std::size_t slice_size() const { return height * width; }

    std::span<double> slice(std::size_t i) { return {data.data() + i * slice_size(), slice_size()}; }
    std::span<const double> slice(std::size_t i) const {
        return {data.data() + i * slice_size(), slice_size()};
    }

    double& at(std::size_t i, std::size_t h, std::size_t w) { return data[(i * height + h) * width + w]; }
    double at(std::size_t i, std::size_t h, std::size_t w) const { return data[(i * height + h) * width + w]; }

    /// Throws ShapeError / DomainError when an invariant is broken.
    void validate() const;
};

/// A single 2D slice detached from its volume.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Image() = default;
    Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}
    Image(std::size_t h, std::size_t w, std::span<const double> src)
        : height(h), width(w), data(src.begin(), src.end()) {}

    double& operator()(std::size_t h, std::size_t w) { return data[h * width + w]; }
    double operator()(std::size_t h, std::size_t w) const { return data[h * width + w]; }
};

}  // namespace kneenet
