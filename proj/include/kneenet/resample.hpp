#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kneenet/volume.hpp"

namespace kneenet {

/// Row-stochastic M x N weights mapping N source slices onto M output slices.
///
/// Output cell j covers [j*N/M, (j+1)*N/M) on the source axis; its weight on
/// source cell i is the overlap with [i, i+1) scaled by M/N (box-overlap /
/// area resampling). Overlaps are computed in integers on a grid of 1/M so the
/// N == M case is exactly the identity.
class InterpolationMatrix {
public:
    InterpolationMatrix(std::size_t n_source, std::size_t n_target);

    std::size_t n_source() const { return n_; }
    std::size_t n_target() const { return m_; }

    double operator()(std::size_t row, std::size_t col) const { return weights_[row * n_ + col]; }
    std::span<const double> row(std::size_t j) const { return {weights_.data() + j * n_, n_}; }

    /// Half-open range [first, last) of nonzero columns in row j.
    std::size_t first_nonzero(std::size_t j) const { return first_[j]; }
    std::size_t last_nonzero(std::size_t j) const { return last_[j]; }

private:
    std::size_t n_, m_;
    std::vector<double> weights_;
    std::vector<std::size_t> first_, last_;
};

InterpolationMatrix interpolation_matrix(std::size_t n, std::size_t m);

enum class ResampleMode { interpolate, middle_window };
enum class ResliceAxis { none, horizontal };

struct ResampleSpec {
    ResampleMode mode = ResampleMode::interpolate;
    std::size_t target_count = 15;
    ResliceAxis reslice_axis = ResliceAxis::none;

    static std::size_t default_count(ResampleMode mode) { return mode == ResampleMode::interpolate ? 15 : 17; }
};

MriVolume resample_volume(const MriVolume& vol, std::size_t m);

/// Centered window of k slices, start = floor((s - k) / 2). Throws WindowError if k > s.
MriVolume middle_slices(const MriVolume& vol, std::size_t k);

/// out[h][i][w] = in[i][h][w]; applying it twice restores the input.
MriVolume reslice_horizontal(const MriVolume& vol);

/// Bilinear resize with half-pixel centers and edge clamping; output clipped to [0, 1].
Image resize_bilinear(const Image& image, std::size_t out_h, std::size_t out_w);

/// Resizes every slice of a volume.
MriVolume resize_volume(const MriVolume& vol, std::size_t out_h, std::size_t out_w);

/// Applies reslicing (if requested) then interpolation or windowing.
MriVolume apply_resample(const MriVolume& vol, const ResampleSpec& spec);

}  // namespace kneenet
