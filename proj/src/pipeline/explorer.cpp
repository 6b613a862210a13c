#include "kneenet/pipeline/explorer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>

#include <png.h>

#include "kneenet/dataset.hpp"
#include "kneenet/error.hpp"
#include "kneenet/npy.hpp"

namespace kneenet {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png_gray(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    std::span<const std::uint8_t> pixels) {
    if (pixels.size() != height * width) throw ShapeError("png: pixel count does not match the image size");
    File f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: cannot allocate writer");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: failed writing " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < height; ++y) png_write_row(png, pixels.data() + y * width);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<std::uint8_t> read_png_gray(const std::filesystem::path& path, std::size_t& height, std::size_t& width) {
    File f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: cannot allocate reader");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("png: failed reading " + path.string());
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("png: " + path.string() + " is not 8-bit grayscale");
    }
    height = png_get_image_height(png, info);
    width = png_get_image_width(png, info);
    std::vector<std::uint8_t> out(height * width);
    for (std::size_t y = 0; y < height; ++y) png_read_row(png, out.data() + y * width, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

nlohmann::json export_explorer(const std::filesystem::path& data_root, const std::filesystem::path& out,
                               const std::vector<PredictionRecord>* predictions) {
    const auto manifests = scan_dataset(data_root);
    std::error_code mk;
    std::filesystem::create_directories(out, mk);
    if (mk) throw IoError("cannot create " + out.string() + ": " + mk.message());

    // case id -> task -> preferred probability
    std::map<std::string, std::map<std::string, double>> pred;
    if (predictions) {
        struct Acc {
            std::optional<double> combined, all;
            double sum = 0.0;
            std::size_t n = 0;
        };
        std::map<std::pair<std::string, std::string>, Acc> acc;
        for (const auto& r : *predictions) {
            auto& a = acc[{r.case_id, std::string(to_string(r.task))}];
            if (r.plane == "combined") a.combined = r.probability;
            else if (r.plane == "all") a.all = r.probability;
            else {
                a.sum += r.probability;
                ++a.n;
            }
        }
        for (const auto& [key, a] : acc)
            pred[key.first][key.second] = a.combined ? *a.combined : a.all ? *a.all : a.sum / static_cast<double>(a.n);
    }

    nlohmann::json cases = nlohmann::json::array();
    std::vector<const CaseEntry*> entries;
    std::map<std::string, Split> split_of;
    for (const auto& m : manifests)
        for (const auto& c : m.cases) {
            if (split_of.count(c.id)) throw IntegrityError("case " + c.id + " appears in both splits");
            split_of[c.id] = m.split;
            entries.push_back(&c);
        }
    std::sort(entries.begin(), entries.end(), [](const CaseEntry* a, const CaseEntry* b) { return a->id < b->id; });

    std::array<std::array<std::optional<LabelTable>, 3>, 2> tables;
    for (Split s : kAllSplits)
        for (Task t : kAllTasks) {
            const auto path = labels_path(data_root, s, t);
            if (std::filesystem::exists(path)) tables[index_of(s)][index_of(t)] = load_labels(path, t);
        }

    for (const CaseEntry* c : entries) {
        nlohmann::json planes = nlohmann::json::object();
        for (Plane p : kAllPlanes) {
            const auto vol = load_volume(c->files[index_of(p)], c->id, p);
            const std::string rel_dir = "cases/" + c->id + "/" + std::string(to_string(p));
            std::error_code ec;
            std::filesystem::create_directories(out / rel_dir, ec);
            if (ec) throw IoError("cannot create " + (out / rel_dir).string() + ": " + ec.message());
            nlohmann::json files = nlohmann::json::array();
            std::vector<std::uint8_t> px(vol.height * vol.width);
            for (std::size_t i = 0; i < vol.slices; ++i) {
                const auto s = vol.slice(i);
                for (std::size_t k = 0; k < px.size(); ++k)
                    px[k] = static_cast<std::uint8_t>(std::lround(std::clamp(s[k], 0.0, 1.0) * 255.0));
                const std::string rel = rel_dir + "/" + std::to_string(i) + ".png";
                write_png_gray(out / rel, vol.height, vol.width, px);
                files.push_back(rel);
            }
            planes[std::string(to_string(p))] = {{"count", vol.slices}, {"files", files}};
        }
        nlohmann::json labels = nlohmann::json::object();
        const Split split = split_of.at(c->id);
        for (Task t : kAllTasks) {
            const auto& table = tables[index_of(split)][index_of(t)];
            if (table && table->contains(c->id)) labels[std::string(to_string(t))] = table->at(c->id);
        }
        nlohmann::json item{{"id", c->id}, {"split", to_string(split)}, {"planes", planes}, {"labels", labels}};
        if (const auto it = pred.find(c->id); it != pred.end()) item["predictions"] = it->second;
        cases.push_back(item);
    }
    nlohmann::json manifest{{"cases", cases}};
    std::ofstream f(out / "manifest.json");
    f << manifest.dump(2) << '\n';
    if (!f) throw IoError("cannot write " + (out / "manifest.json").string());
    return manifest;
}

}  // namespace kneenet
