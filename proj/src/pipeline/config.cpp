#include "kneenet/pipeline/config.hpp"

#include <fstream>
#include <set>

#include "kneenet/error.hpp"

namespace kneenet {

namespace {

const char* resample_mode_name(ResampleMode m) {
    return m == ResampleMode::interpolate ? "interpolate" : "middle_window";
}

template <class E, class Parse>
std::vector<E> parse_list(const nlohmann::json& j, const char* key, Parse parse) {
    if (!j.is_array() || j.empty()) throw ConfigError(std::string("run config: '") + key + "' must be a non-empty array");
    std::vector<E> out;
    for (const auto& v : j) {
        const auto s = v.get<std::string>();
        const auto e = parse(s);
        if (!e) throw ConfigError(std::string("run config: unknown ") + key + " entry '" + s + "'");
        if (std::find(out.begin(), out.end(), *e) != out.end())
            throw ConfigError(std::string("run config: duplicate ") + key + " entry '" + s + "'");
        out.push_back(*e);
    }
    return out;
}

}  // namespace

std::string_view to_string(ConfigId id) {
    switch (id) {
        case ConfigId::c41: return "c41";
        case ConfigId::c42: return "c42";
        case ConfigId::c43: return "c43";
        case ConfigId::c44: return "c44";
    }
    return "?";
}

std::string_view to_string(SlicePooling p) { return p == SlicePooling::max ? "max" : "mean"; }

RunConfig default_config(ConfigId id) {
    RunConfig c;
    c.config_id = id;
    switch (id) {
        case ConfigId::c41:
            c.model.in_channels = 3;
            c.batch_size = 1;
            c.slice_pooling = SlicePooling::max;
            c.augmentation.channel_mode = ChannelMode::three_channel;
            break;
        case ConfigId::c42:
            c.model.in_channels = 1;
            c.augmentation.channel_mode = ChannelMode::single_channel;
            break;
        case ConfigId::c43:
        case ConfigId::c44:
            c.model.in_channels = 45;
            c.model.aggregation = Aggregation::stacked_channels;
            c.planes = {Plane::axial, Plane::coronal, Plane::sagittal};
            c.augmentation.channel_mode = ChannelMode::single_channel;
            if (id == ConfigId::c44) {
                c.model.out_tasks = 3;
                c.tasks = {Task::acl, Task::meniscus, Task::abnormal};
            }
            break;
    }
    return c;
}

void RunConfig::validate() const {
    auto fail = [&](const std::string& msg) { throw ConfigError(std::string(to_string(config_id)) + ": " + msg); };
    try {
        model.validate();
        augmentation.validate();
    } catch (const Error& e) {
        fail(e.what());
    }
    if (tasks.empty() || planes.empty()) fail("tasks and planes must be non-empty");
    if (batch_size == 0) fail("batch_size must be positive");
    if (!(optimizer.lr > 0) || !(optimizer.weight_decay >= 0)) fail("invalid optimizer hyperparameters");
    if (model.out_tasks != (config_id == ConfigId::c44 ? tasks.size() : 1))
        fail("out_tasks must equal the number of tasks trained jointly");

    switch (config_id) {
        case ConfigId::c41:
            if (model.aggregation != Aggregation::max_over_slices) fail("requires max_over_slices aggregation");
            if (model.in_channels != 3) fail("requires in_channels 3 (slice repeated per channel)");
            if (batch_size != 1) fail("requires batch size of one volume (slice counts vary)");
            if (slice_pooling != SlicePooling::max) fail("requires max pooling over slices");
            if (augmentation.channel_mode != ChannelMode::three_channel) fail("requires the three-channel policy");
            break;
        case ConfigId::c42:
            if (model.aggregation != Aggregation::max_over_slices) fail("requires a per-slice model");
            if (model.in_channels != 1) fail("requires in_channels 1");
            if (resample.target_count == 0) fail("requires a fixed slice count");
            if (augmentation.channel_mode != ChannelMode::single_channel) fail("requires the single-channel policy");
            break;
        case ConfigId::c43:
        case ConfigId::c44:
            if (model.aggregation != Aggregation::stacked_channels) fail("requires stacked_channels aggregation");
            if (model.in_channels != 45) fail("requires in_channels 45");
            if (planes.size() != 3 || resample.target_count * planes.size() != model.in_channels)
                fail("requires all three planes at 15 slices each");
            if (augmentation.channel_mode != ChannelMode::single_channel) fail("requires the single-channel policy");
            if (config_id == ConfigId::c43 && tasks.size() != 1) fail("trains one task");
            if (config_id == ConfigId::c44 && (tasks.size() != 3 || model.out_tasks != 3)) fail("requires out_tasks 3");
            break;
    }
    if (config_id == ConfigId::c41 || config_id == ConfigId::c42) {
        if (tasks.size() != 1 || planes.size() != 1) fail("trains one task on one plane");
    }
}

void to_json(nlohmann::json& j, const RunConfig& c) {
    nlohmann::json tasks = nlohmann::json::array(), planes = nlohmann::json::array();
    for (auto t : c.tasks) tasks.push_back(to_string(t));
    for (auto p : c.planes) planes.push_back(to_string(p));
    j = nlohmann::json{
        {"config_id", to_string(c.config_id)},
        {"tasks", tasks},
        {"planes", planes},
        {"resample",
         {{"mode", resample_mode_name(c.resample.mode)},
          {"target_count", c.resample.target_count},
          {"reslice", c.resample.reslice_axis == ResliceAxis::horizontal ? "horizontal" : "none"}}},
        {"augmentation", c.augmentation},
        {"model", c.model},
        {"optimizer",
         {{"lr", c.optimizer.lr},
          {"beta1", c.optimizer.beta1},
          {"beta2", c.optimizer.beta2},
          {"eps", c.optimizer.eps},
          {"weight_decay", c.optimizer.weight_decay}}},
        {"slice_pooling", to_string(c.slice_pooling)},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"seed", c.seed},
        {"combiner_fit_split", to_string(c.combiner_fit_split)},
        {"data_root", c.data_root.generic_string()},
        {"output_dir", c.output_dir.generic_string()},
    };
}

void from_json(const nlohmann::json& j, RunConfig& out) {
    static const std::set<std::string> known{"config_id",     "tasks",      "planes", "resample", "augmentation",
                                             "model",         "optimizer",  "slice_pooling", "epochs",
                                             "batch_size",    "seed",       "combiner_fit_split", "data_root",
                                             "output_dir"};
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("run config: unknown key '" + k + "'");
    if (!j.contains("config_id")) throw ConfigError("run config: missing config_id");

    const auto id_name = j.at("config_id").get<std::string>();
    ConfigId id;
    if (id_name == "c41") id = ConfigId::c41;
    else if (id_name == "c42") id = ConfigId::c42;
    else if (id_name == "c43") id = ConfigId::c43;
    else if (id_name == "c44") id = ConfigId::c44;
    else throw ConfigError("run config: unknown config_id '" + id_name + "'");

    try {
        RunConfig c = default_config(id);
        if (j.contains("tasks")) c.tasks = parse_list<Task>(j.at("tasks"), "tasks", parse_task);
        if (j.contains("planes")) c.planes = parse_list<Plane>(j.at("planes"), "planes", parse_plane);
        if (j.contains("resample")) {
            const auto& r = j.at("resample");
            for (const auto& [k, v] : r.items())
                if (k != "mode" && k != "target_count" && k != "reslice")
                    throw ConfigError("run config: unknown resample key '" + k + "'");
            if (r.contains("mode")) {
                const auto m = r.at("mode").get<std::string>();
                if (m == "interpolate") c.resample.mode = ResampleMode::interpolate;
                else if (m == "middle_window") c.resample.mode = ResampleMode::middle_window;
                else throw ConfigError("run config: unknown resample mode '" + m + "'");
                c.resample.target_count = ResampleSpec::default_count(c.resample.mode);
            }
            if (r.contains("target_count")) c.resample.target_count = r.at("target_count").get<std::size_t>();
            if (r.contains("reslice")) {
                const auto s = r.at("reslice").get<std::string>();
                if (s == "none") c.resample.reslice_axis = ResliceAxis::none;
                else if (s == "horizontal") c.resample.reslice_axis = ResliceAxis::horizontal;
                else throw ConfigError("run config: unknown reslice axis '" + s + "'");
            }
        }
        if (j.contains("augmentation")) c.augmentation = j.at("augmentation").get<AugmentationPolicy>();
        if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
        if (j.contains("optimizer")) {
            const auto& o = j.at("optimizer");
            static const std::set<std::string> keys{"lr", "beta1", "beta2", "eps", "weight_decay"};
            for (const auto& [k, v] : o.items())
                if (!keys.count(k)) throw ConfigError("run config: unknown optimizer key '" + k + "'");
            if (o.contains("lr")) c.optimizer.lr = o.at("lr").get<double>();
            if (o.contains("beta1")) c.optimizer.beta1 = o.at("beta1").get<double>();
            if (o.contains("beta2")) c.optimizer.beta2 = o.at("beta2").get<double>();
            if (o.contains("eps")) c.optimizer.eps = o.at("eps").get<double>();
            if (o.contains("weight_decay")) c.optimizer.weight_decay = o.at("weight_decay").get<double>();
        }
        if (j.contains("slice_pooling")) {
            const auto s = j.at("slice_pooling").get<std::string>();
            if (s == "max") c.slice_pooling = SlicePooling::max;
            else if (s == "mean") c.slice_pooling = SlicePooling::mean;
            else throw ConfigError("run config: unknown slice_pooling '" + s + "'");
        }
        if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
        if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("combiner_fit_split")) {
            const auto s = parse_split(j.at("combiner_fit_split").get<std::string>());
            if (!s) throw ConfigError("run config: unknown combiner_fit_split");
            c.combiner_fit_split = *s;
        }
        if (j.contains("data_root")) c.data_root = j.at("data_root").get<std::string>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        c.validate();
        out = std::move(c);
    } catch (const ConfigError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    } catch (const Error& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("run config " + path.string() + ": " + e.what());
    }
    return j.get<RunConfig>();
}

}  // namespace kneenet
