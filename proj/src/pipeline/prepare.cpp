#include "kneenet/pipeline/prepare.hpp"

#include "kneenet/dataset.hpp"
#include "kneenet/error.hpp"
#include "kneenet/npy.hpp"
#include "kneenet/resample.hpp"

namespace kneenet {

PreparedSplit prepare_split(const RunConfig& config, Split split) {
    const auto manifest = scan_dataset(config.data_root, split);
    std::vector<LabelTable> tables;
    for (Task t : config.tasks) tables.push_back(load_labels(labels_path(config.data_root, split, t), t));

    PreparedSplit out;
    out.split = split;
    for (const auto& entry : manifest.cases) {
        PreparedCase c;
        c.id = entry.id;
        for (std::size_t k = 0; k < config.tasks.size(); ++k) {
            if (!tables[k].contains(entry.id))
                throw IntegrityError("case " + entry.id + " has no " + std::string(to_string(config.tasks[k])) +
                                     " label");
            c.labels[index_of(config.tasks[k])] = tables[k].at(entry.id);
        }
        for (Plane p : config.planes) {
            auto vol = load_volume(entry.files[index_of(p)], entry.id, p);
            if (config.config_id != ConfigId::c41) vol = apply_resample(vol, config.resample);
            c.volumes.push_back(std::move(vol));
        }
        out.cases.push_back(std::move(c));
    }
    if (out.cases.empty()) throw LayoutError("no usable cases in " + config.data_root.string());
    return out;
}

Tensor<float> build_input(const RunConfig& config, const PreparedCase& c, Split split,
                          const std::vector<TransformPlan>& plans, const AugmentHook& hook) {
    if (!plans.empty() && plans.size() != c.volumes.size())
        throw UsageError("build_input: one transform plan per volume expected");
    const std::size_t size = config.model.input_size;
    std::vector<MriVolume> ready;
    ready.reserve(c.volumes.size());
    for (std::size_t v = 0; v < c.volumes.size(); ++v) {
        const MriVolume* src = &c.volumes[v];
        MriVolume augmented;
        if (!plans.empty() && !plans[v].empty()) {
            augmented = apply_plan(*src, plans[v]);
            if (hook) hook(split, plans[v].steps.size());
            src = &augmented;
        }
        ready.push_back(src->height == size && src->width == size ? *src : resize_volume(*src, size, size));
    }

    const std::size_t plane = size * size;
    if (config.stacked()) {
        std::size_t channels = 0;
        for (const auto& v : ready) channels += v.slices;
        if (channels != config.model.in_channels)
            throw ShapeError("stacked input has " + std::to_string(channels) + " channels, model expects " +
                             std::to_string(config.model.in_channels));
        Tensor<float> t(1, channels, size, size);
        std::size_t ch = 0;
        for (const auto& v : ready)
            for (std::size_t s = 0; s < v.slices; ++s, ++ch)
                std::copy_n(v.data.begin() + s * plane, plane, t.channel(0, ch));
        return t;
    }
    const auto& v = ready.front();
    const std::size_t reps = config.model.in_channels;
    Tensor<float> t(v.slices, reps, size, size);
    for (std::size_t s = 0; s < v.slices; ++s)
        for (std::size_t r = 0; r < reps; ++r) std::copy_n(v.data.begin() + s * plane, plane, t.channel(s, r));
    return t;
}

}  // namespace kneenet
