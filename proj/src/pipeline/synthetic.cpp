#include "kneenet/pipeline/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <system_error>

#include "kneenet/error.hpp"
#include "kneenet/npy.hpp"
#include "kneenet/rng.hpp"

namespace kneenet {

namespace {

constexpr std::size_t kMinSlices = 17;
constexpr std::size_t kMaxSlices = 61;

// In-plane lesion geometry per task, as fractions of the slice size:
// centre row, centre column, row radius, column radius.
struct LesionShape {
    double cy, cx, ry, rx;
};
constexpr LesionShape kShapes[3] = {
    {0.30, 0.50, 0.11, 0.035},  // acl: vertical bar, upper half
    {0.70, 0.50, 0.035, 0.14},  // meniscus: horizontal bar, lower half
    {0.50, 0.50, 0.07, 0.07},   // abnormal: round blob, centre
};

std::string case_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return buf;
}

MriVolume make_volume(const std::string& id, Plane plane, std::size_t size, const std::array<int, 3>& labels,
                      Rng& rng) {
    const auto s = static_cast<std::size_t>(rng.uniform_int(kMinSlices, kMaxSlices));
    MriVolume v;
    v.case_id = id;
    v.plane = plane;
    v.slices = s;
    v.height = v.width = size;
    v.data.assign(s * size * size, 0.0);

    // Background: a dim ellipse of tissue.
    const double by = 0.5 + rng.uniform(-0.04, 0.04), bx = 0.5 + rng.uniform(-0.04, 0.04);
    const double bry = rng.uniform(0.38, 0.45), brx = rng.uniform(0.36, 0.45);
    const double tissue = rng.uniform(0.25, 0.35);
    for (std::size_t z = 0; z < s; ++z)
        for (std::size_t y = 0; y < size; ++y)
            for (std::size_t x = 0; x < size; ++x) {
                const double dy = ((y + 0.5) / size - by) / bry, dx = ((x + 0.5) / size - bx) / brx;
                v.data[(z * size + y) * size + x] = dy * dy + dx * dx <= 1.0 ? tissue : 0.05;
            }

    for (std::size_t t = 0; t < 3; ++t) {
        if (!labels[t]) continue;
        const auto& sh = kShapes[t];
        const double cz = rng.uniform(s / 3.0, 2.0 * s / 3.0);
        const double rz = std::max(1.5, s * rng.uniform(0.08, 0.14));
        const double cy = sh.cy + rng.uniform(-0.03, 0.03), cx = sh.cx + rng.uniform(-0.03, 0.03);
        const double gain = rng.uniform(0.22, 0.4);
        for (std::size_t z = 0; z < s; ++z) {
            const double dz = (z + 0.5 - cz) / rz;
            if (std::abs(dz) > 1.0) continue;
            for (std::size_t y = 0; y < size; ++y)
                for (std::size_t x = 0; x < size; ++x) {
                    const double dy = ((y + 0.5) / size - cy) / sh.ry, dx = ((x + 0.5) / size - cx) / sh.rx;
                    const double r2 = dz * dz + dy * dy + dx * dx;
                    if (r2 <= 1.0) v.data[(z * size + y) * size + x] += gain * (1.0 - 0.5 * r2);
                }
        }
    }
    // Distractors: small bright spots anywhere in the tissue, in every exam.
    const auto spots = rng.uniform_int(0, 3);
    for (std::int64_t k = 0; k < spots; ++k) {
        const double cz = rng.uniform(0.0, static_cast<double>(s));
        const double cy = rng.uniform(0.2, 0.8), cx = rng.uniform(0.2, 0.8), r = rng.uniform(0.03, 0.05);
        const double gain = rng.uniform(0.1, 0.3);
        for (std::size_t z = 0; z < s; ++z) {
            const double dz = (z + 0.5 - cz) / 2.0;
            if (std::abs(dz) > 1.0) continue;
            for (std::size_t y = 0; y < size; ++y)
                for (std::size_t x = 0; x < size; ++x) {
                    const double dy = ((y + 0.5) / size - cy) / r, dx = ((x + 0.5) / size - cx) / r;
                    const double r2 = dz * dz + dy * dy + dx * dx;
                    if (r2 <= 1.0) v.data[(z * size + y) * size + x] += gain * (1.0 - 0.5 * r2);
                }
        }
    }
    for (auto& px : v.data) px = std::clamp(px + 0.07 * rng.normal(), 0.0, 1.0);
    return v;
}

}  // namespace

std::array<DatasetManifest, 2> generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out) {
    if (spec.cases < 4) throw UsageError("synthetic dataset needs at least 4 cases");
    if (spec.size < 8) throw UsageError("synthetic slice size must be at least 8");
    const auto n_valid = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(spec.valid_fraction * static_cast<double>(spec.cases))));
    const std::size_t n_train = spec.cases - n_valid;

    std::error_code ec;
    for (Split split : kAllSplits)
        for (Plane plane : kAllPlanes) {
            std::filesystem::create_directories(plane_dir(out, split, plane), ec);
            if (ec) throw IoError("cannot create " + plane_dir(out, split, plane).string() + ": " + ec.message());
        }

    std::array<std::array<LabelTable, 3>, 2> tables;
    for (Split split : kAllSplits)
        for (Task task : kAllTasks) tables[index_of(split)][index_of(task)].task = task;

    for (std::size_t i = 0; i < spec.cases; ++i) {
        const std::string id = case_id(i);
        const Split split = i < n_train ? Split::train : Split::valid;
        Rng label_rng(derive_seed(spec.seed, {0x1abe1, i}));
        std::array<int, 3> labels{};
        for (Task task : kAllTasks) {
            labels[index_of(task)] = label_rng.bernoulli(spec.prevalence[index_of(task)]) ? 1 : 0;
            tables[index_of(split)][index_of(task)].entries[id] = labels[index_of(task)];
        }
        for (Plane plane : kAllPlanes) {
            Rng rng(derive_seed(spec.seed, {0x7011, i, index_of(plane)}));
            const auto vol = make_volume(id, plane, spec.size, labels, rng);
            save_volume_u8(plane_dir(out, split, plane) / (id + ".npy"), vol);
        }
    }
    for (Split split : kAllSplits)
        for (Task task : kAllTasks) save_labels(labels_path(out, split, task), tables[index_of(split)][index_of(task)]);
    return scan_dataset(out);
}

}  // namespace kneenet
