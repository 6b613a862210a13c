#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "kneenet/volume.hpp"

namespace kneenet::npy {

enum class Dtype { u8, f32, f64 };

struct Header {
    Dtype dtype = Dtype::u8;
    bool fortran_order = false;
    std::vector<std::size_t> shape;
    std::size_t data_offset = 0;  // bytes from file start to the first element
};

/// Parses the header of an NPY v1.0 (or v2.0) stream held in `bytes`.
/// Dtype and layout restrictions are checked by the volume loader, not here,
/// except that the descr must be one of |u1, <f4, <f8.
Header parse_header(std::string_view bytes);

Header read_header(const std::filesystem::path& path);

/// Serialized header (magic, version, length, padded dict) for a C-order array.
std::string make_header(Dtype dtype, const std::vector<std::size_t>& shape);

void write_u8(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
              std::span<const std::uint8_t> data);
void write_f32(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               std::span<const float> data);
void write_f64(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               std::span<const double> data);

}  // namespace kneenet::npy

namespace kneenet {

/// Reads a 3-D C-order NPY array as a volume. uint8 data is divided by 255,
/// floats are clipped to [0, 1].
MriVolume load_volume(const std::filesystem::path& path, std::string case_id, Plane plane);

/// Stores the volume as |u1 with round(255 * x).
void save_volume_u8(const std::filesystem::path& path, const MriVolume& vol);

}  // namespace kneenet
