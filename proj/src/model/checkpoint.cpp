#include "kneenet/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "kneenet/error.hpp"

namespace kneenet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void save_checkpoint(const std::filesystem::path& path, const Network<float>& model, const nlohmann::json& extra) {
    nlohmann::json meta = extra.is_object() ? extra : nlohmann::json::object();
    meta["model"] = model.config();
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : model.blocks()) blocks.push_back({{"name", b.name}, {"size", b.value.size()}});
    meta["blocks"] = blocks;
    const std::string text = meta.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.put(static_cast<char>(kCheckpointVersion));
    const auto len = static_cast<std::uint32_t>(text.size());
    char lenbuf[4];
    std::memcpy(lenbuf, &len, 4);
    out.write(lenbuf, 4);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& b : model.blocks())
        out.write(reinterpret_cast<const char*>(b.value.data()), static_cast<std::streamsize>(b.value.size() * 4));
    if (!out) throw IoError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    const int version = in.get();
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint " + path.string() + ": unsupported format version " + std::to_string(version));
    std::uint32_t len = 0;
    char lenbuf[4];
    if (!in.read(lenbuf, 4)) throw FormatError("checkpoint: truncated header");
    std::memcpy(&len, lenbuf, 4);
    std::string text(len, '\0');
    if (!in.read(text.data(), len)) throw FormatError("checkpoint: truncated config");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: bad config JSON: ") + e.what());
    }
    Network<float> model(meta.at("model").get<ModelConfig>());
    const auto& names = meta.at("blocks");
    if (names.size() != model.block_count()) throw FormatError("checkpoint: block count does not match config");
    for (std::size_t i = 0; i < model.block_count(); ++i) {
        auto dst = model.mutable_block(i);
        if (names[i].at("size").get<std::size_t>() != dst.size())
            throw FormatError("checkpoint: block size mismatch for " + model.blocks()[i].name);
        if (!in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(dst.size() * 4)))
            throw FormatError("checkpoint: truncated parameters");
    }
    return {std::move(meta), std::move(model)};
}

}  // namespace kneenet
