#include "kneenet/resample.hpp"

#include <algorithm>
#include <cmath>

#include "kneenet/error.hpp"
#include "kneenet/simd/kernels.hpp"

namespace kneenet {

InterpolationMatrix::InterpolationMatrix(std::size_t n_source, std::size_t n_target)
    : n_(n_source), m_(n_target) {
    if (n_ == 0 || m_ == 0) throw DomainError("interpolation_matrix: counts must be >= 1");
    weights_.assign(m_ * n_, 0.0);
    first_.assign(m_, 0);
    last_.assign(m_, 0);
    const double n = static_cast<double>(n_);
    for (std::size_t j = 0; j < m_; ++j) {
        // Units of 1/m: output span [j*n, (j+1)*n), source cell [i*m, (i+1)*m).
        const std::size_t lo = j * n_, hi = (j + 1) * n_;
        const std::size_t i0 = lo / m_;
        const std::size_t i1 = std::min(n_, (hi + m_ - 1) / m_);
        first_[j] = n_;
        for (std::size_t i = i0; i < i1; ++i) {
            const std::size_t a = std::max(lo, i * m_), b = std::min(hi, (i + 1) * m_);
            if (b <= a) continue;
            weights_[j * n_ + i] = static_cast<double>(b - a) / n;
            first_[j] = std::min(first_[j], i);
            last_[j] = i + 1;
        }
    }
}

InterpolationMatrix interpolation_matrix(std::size_t n, std::size_t m) { return InterpolationMatrix(n, m); }

MriVolume resample_volume(const MriVolume& vol, std::size_t m) {
    const InterpolationMatrix w(vol.slices, m);
    MriVolume out(vol.case_id, vol.plane, m, vol.height, vol.width);
    out.resliced = vol.resliced;
    if (m == vol.slices) {
        out.data = vol.data;
        return out;
    }
    for (std::size_t j = 0; j < m; ++j) {
        auto dst = out.slice(j);
        for (std::size_t i = w.first_nonzero(j); i < w.last_nonzero(j); ++i)
            simd::axpy(w(j, i), vol.slice(i), dst);
        simd::clamp(dst, dst, 0.0, 1.0);
    }
    return out;
}

MriVolume middle_slices(const MriVolume& vol, std::size_t k) {
    if (k == 0) throw DomainError("middle_slices: window must be >= 1");
    if (k > vol.slices)
        throw WindowError("middle_slices: window " + std::to_string(k) + " exceeds " +
                          std::to_string(vol.slices) + " slices");
    const std::size_t start = (vol.slices - k) / 2;
    MriVolume out(vol.case_id, vol.plane, k, vol.height, vol.width);
    out.resliced = vol.resliced;
    std::copy_n(vol.data.begin() + static_cast<std::ptrdiff_t>(start * vol.slice_size()), k * vol.slice_size(),
                out.data.begin());
    return out;
}

MriVolume reslice_horizontal(const MriVolume& vol) {
    MriVolume out(vol.case_id, vol.plane, vol.height, vol.slices, vol.width);
    out.resliced = !vol.resliced;
    for (std::size_t i = 0; i < vol.slices; ++i)
        for (std::size_t h = 0; h < vol.height; ++h)
            std::copy_n(&vol.data[(i * vol.height + h) * vol.width], vol.width, &out.at(h, i, 0));
    return out;
}

namespace {

struct Tap {
    std::size_t i0, i1;
    double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
    std::vector<Tap> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t d = 0; d < out; ++d) {
        double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const auto i0 = static_cast<std::size_t>(std::floor(src));
        const std::size_t i1 = std::min(i0 + 1, in - 1);
        taps[d] = {i0, i1, src - static_cast<double>(i0)};
    }
    return taps;
}

}  // namespace

Image resize_bilinear(const Image& image, std::size_t out_h, std::size_t out_w) {
    if (image.height == 0 || image.width == 0 || out_h == 0 || out_w == 0)
        throw DomainError("resize_bilinear: sizes must be >= 1");
    if (out_h == image.height && out_w == image.width) return image;
    const auto ty = bilinear_taps(image.height, out_h);
    const auto tx = bilinear_taps(image.width, out_w);
    Image out(out_h, out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const auto& a = ty[y];
        for (std::size_t x = 0; x < out_w; ++x) {
            const auto& b = tx[x];
            const double top = image(a.i0, b.i0) + b.frac * (image(a.i0, b.i1) - image(a.i0, b.i0));
            const double bot = image(a.i1, b.i0) + b.frac * (image(a.i1, b.i1) - image(a.i1, b.i0));
            out(y, x) = std::clamp(top + a.frac * (bot - top), 0.0, 1.0);
        }
    }
    return out;
}

MriVolume resize_volume(const MriVolume& vol, std::size_t out_h, std::size_t out_w) {
    if (out_h == vol.height && out_w == vol.width) return vol;
    MriVolume out(vol.case_id, vol.plane, vol.slices, out_h, out_w);
    out.resliced = vol.resliced;
    for (std::size_t i = 0; i < vol.slices; ++i) {
        const Image src(vol.height, vol.width, vol.slice(i));
        const Image r = resize_bilinear(src, out_h, out_w);
        std::copy(r.data.begin(), r.data.end(), out.slice(i).begin());
    }
    return out;
}

MriVolume apply_resample(const MriVolume& vol, const ResampleSpec& spec) {
    if (spec.target_count < 1) throw DomainError("resample: target_count must be >= 1");
    const MriVolume& src = vol;
    MriVolume resliced;
    const MriVolume* in = &src;
    if (spec.reslice_axis == ResliceAxis::horizontal) {
        resliced = reslice_horizontal(vol);
        in = &resliced;
    }
    return spec.mode == ResampleMode::interpolate ? resample_volume(*in, spec.target_count)
                                                  : middle_slices(*in, spec.target_count);
}

}  // namespace kneenet
