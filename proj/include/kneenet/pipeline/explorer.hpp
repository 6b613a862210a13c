#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "kneenet/metrics.hpp"

namespace kneenet {

/// 8-bit grayscale PNG, row-major pixels.
void write_png_gray(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    std::span<const std::uint8_t> pixels);

/// Reads an 8-bit grayscale PNG back (used to verify exports).
std::vector<std::uint8_t> read_png_gray(const std::filesystem::path& path, std::size_t& height, std::size_t& width);

/// Writes cases/<id>/<plane>/<i>.png for every slice of every case in both
/// splits (pixel = round(255 x intensity)) plus manifest.json, and returns
/// the manifest. Labels come from the split label tables when present.
/// Per-task predictions prefer the "combined" record, then a stacked ("all")
/// record, then the mean of the per-plane records.
nlohmann::json export_explorer(const std::filesystem::path& data_root, const std::filesystem::path& out,
                               const std::vector<PredictionRecord>* predictions = nullptr);

}  // namespace kneenet
