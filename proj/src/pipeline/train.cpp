#include "kneenet/pipeline/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "kneenet/error.hpp"
#include "kneenet/model/adam.hpp"
#include "kneenet/model/aggregate.hpp"
#include "kneenet/model/checkpoint.hpp"
#include "kneenet/model/loss.hpp"

namespace kneenet {

namespace {

// Seed stream labels.
constexpr std::uint64_t kInitStream = 1, kShuffleStream = 2, kAugmentStream = 3;

struct Pooled {
    float logit;
    std::size_t argmax;  // slice the gradient flows to under max pooling
};

// Exam logit from the per-slice logits [first, first + count).
Pooled pool(const RunConfig& config, const std::vector<float>& logits, std::size_t first, std::size_t count) {
    if (config.slice_pooling == SlicePooling::max) {
        const auto m = max_over_slices(logits, first, count);
        return {logits[first + m.argmax], m.argmax};
    }
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += logits[first + i];
    return {static_cast<float>(s / static_cast<double>(count)), 0};
}

std::vector<ClassWeights> weights_for(const RunConfig& config, const PreparedSplit& train) {
    std::vector<ClassWeights> out;
    for (Task t : config.tasks) {
        std::vector<int> labels;
        for (const auto& c : train.cases) labels.push_back(c.labels[index_of(t)]);
        out.push_back(class_weights(labels));
    }
    return out;
}

std::string format_probability(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", p);
    return buf;
}

}  // namespace

std::string prediction_plane(const RunConfig& config) {
    return config.stacked() ? "all" : std::string(to_string(config.planes.front()));
}

std::vector<float> predict_logits(const RunConfig& config, const Network<float>& model, const PreparedSplit& data) {
    const std::size_t tasks = config.tasks.size();
    std::vector<float> out;
    out.reserve(data.cases.size() * tasks);
    for (const auto& c : data.cases) {
        const auto x = build_input(config, c, data.split, {});
        const auto logits = model.predict(x);
        if (config.stacked()) {
            out.insert(out.end(), logits.begin(), logits.end());
        } else {
            out.push_back(pool(config, logits, 0, x.n).logit);
        }
    }
    return out;
}

std::vector<PredictionRecord> make_predictions(const RunConfig& config, const Network<float>& model,
                                               const PreparedSplit& data) {
    const auto logits = predict_logits(config, model, data);
    const std::size_t tasks = config.tasks.size();
    std::vector<PredictionRecord> out;
    for (std::size_t i = 0; i < data.cases.size(); ++i)
        for (std::size_t t = 0; t < tasks; ++t)
            out.push_back({data.cases[i].id, config.tasks[t], prediction_plane(config), data.split,
                           static_cast<double>(sigmoid(logits[i * tasks + t]))});
    return out;
}

double mean_loss(const RunConfig& config, std::span<const float> logits, const PreparedSplit& data,
                 const std::vector<ClassWeights>& weights) {
    const std::size_t tasks = config.tasks.size();
    double total = 0.0;
    for (std::size_t i = 0; i < data.cases.size(); ++i)
        for (std::size_t t = 0; t < tasks; ++t) {
            const int y = data.cases[i].labels[index_of(config.tasks[t])];
            total += weighted_bce(static_cast<double>(logits[i * tasks + t]), y, weights[t].of(y)).loss;
        }
    return total / static_cast<double>(data.cases.size());
}

std::vector<double> auc_by_task(const RunConfig& config, const std::vector<PredictionRecord>& predictions,
                                const PreparedSplit& data) {
    std::map<std::string, const PreparedCase*> by_id;
    for (const auto& c : data.cases) by_id[c.id] = &c;
    std::vector<double> out;
    for (Task t : config.tasks) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (const auto& r : predictions) {
            if (r.split != data.split || r.task != t) continue;
            const auto it = by_id.find(r.case_id);
            if (it == by_id.end()) throw IntegrityError("prediction for unknown case " + r.case_id);
            scores.push_back(r.probability);
            labels.push_back(it->second->labels[index_of(t)]);
        }
        out.push_back(auc(scores, labels));
    }
    return out;
}

TrainResult train_model(const RunConfig& config, const PreparedSplit& train, const PreparedSplit& valid,
                        const TrainHooks& hooks) {
    config.validate();
    if (train.split != Split::train || valid.split != Split::valid)
        throw UsageError("train_model: expects the train and valid splits");
    const std::size_t tasks = config.tasks.size();
    const auto weights = weights_for(config, train);

    Rng init_rng(derive_seed(config.seed, {kInitStream}));
    auto model = Network<float>::init(config.model, init_rng);
    auto state = AdamState<float>::for_model(model, config.optimizer);

    TrainResult result{model, 0, {}, {}, {}};
    double best_loss = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train.cases.size());
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(derive_seed(config.seed, {kShuffleStream, epoch}));
        shuffle_rng.shuffle(order.begin(), order.end());

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const std::size_t B = stop - start;

            // Assemble the batch; per-slice configs concatenate the slices of every volume.
            std::vector<Tensor<float>> inputs;
            std::vector<std::size_t> offsets{0};
            for (std::size_t b = start; b < stop; ++b) {
                const auto& c = train.cases[order[b]];
                std::vector<TransformPlan> plans;
                if (config.augmentation.p > 0.0) {
                    for (std::size_t v = 0; v < c.volumes.size(); ++v) {
                        Rng aug_rng(derive_seed(config.seed, {kAugmentStream, epoch, order[b], v}));
                        plans.push_back(sample_plan(config.augmentation, aug_rng));
                    }
                }
                inputs.push_back(build_input(config, c, Split::train, plans, hooks.on_augment));
                offsets.push_back(offsets.back() + inputs.back().n);
            }
            const auto& first = inputs.front();
            Tensor<float> x(offsets.back(), first.c, first.h, first.w);
            for (std::size_t b = 0; b < B; ++b)
                std::copy(inputs[b].data.begin(), inputs[b].data.end(), x.image(offsets[b]));

            auto fwd = model.forward(x, Mode::train);
            std::vector<float> dlogits(fwd.logits.size(), 0.0f);
            double batch_loss = 0.0;
            const float inv_b = 1.0f / static_cast<float>(B);
            for (std::size_t b = 0; b < B; ++b) {
                const auto& c = train.cases[order[start + b]];
                if (config.stacked()) {
                    for (std::size_t t = 0; t < tasks; ++t) {
                        const int y = c.labels[index_of(config.tasks[t])];
                        const auto lg = weighted_bce(fwd.logit(b, t), y, static_cast<float>(weights[t].of(y)));
                        batch_loss += lg.loss;
                        dlogits[b * tasks + t] = lg.dlogit * inv_b;
                    }
                    continue;
                }
                const std::size_t n = offsets[b + 1] - offsets[b];
                const auto pooled = pool(config, fwd.logits, offsets[b], n);
                const int y = c.labels[index_of(config.tasks.front())];
                const auto lg = weighted_bce(pooled.logit, y, static_cast<float>(weights[0].of(y)));
                batch_loss += lg.loss;
                if (config.slice_pooling == SlicePooling::max) {
                    dlogits[offsets[b] + pooled.argmax] = lg.dlogit * inv_b;
                } else {
                    const float share = lg.dlogit * inv_b / static_cast<float>(n);
                    for (std::size_t i = 0; i < n; ++i) dlogits[offsets[b] + i] = share;
                }
            }
            epoch_loss += batch_loss;
            adam_step(state, model, model.backward(fwd.cache, dlogits));
        }

        const auto vlogits = predict_logits(config, model, valid);
        const double vloss = mean_loss(config, vlogits, valid, weights);
        result.history.push_back({epoch, epoch_loss / static_cast<double>(order.size()), vloss});
        if (vloss < best_loss) {
            best_loss = vloss;
            result.model = model;
            result.best_epoch = epoch;
        }
    }

    result.predictions = make_predictions(config, result.model, train);
    const auto vpred = make_predictions(config, result.model, valid);
    result.predictions.insert(result.predictions.end(), vpred.begin(), vpred.end());

    const auto aucs = auc_by_task(config, result.predictions, valid);
    nlohmann::json task_auc = nlohmann::json::object();
    for (std::size_t t = 0; t < tasks; ++t) task_auc[std::string(to_string(config.tasks[t]))] = aucs[t];
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : result.history)
        history.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"valid_loss", h.valid_loss}});
    if (config.epochs == 0) {
        const auto vlogits = predict_logits(config, result.model, valid);
        best_loss = mean_loss(config, vlogits, valid, weights);
    }
    result.metrics = {
        {"config_id", to_string(config.config_id)},
        {"task", tasks == 1 ? std::string(to_string(config.tasks.front())) : std::string("all")},
        {"plane", prediction_plane(config)},
        {"split", "valid"},
        {"auc", std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(tasks)},
        {"task_auc", task_auc},
        {"epochs", config.epochs},
        {"best_epoch", result.best_epoch},
        {"valid_loss", best_loss},
        {"history", history},
    };
    return result;
}

TrainResult run_training(const RunConfig& config, const TrainHooks& hooks) {
    config.validate();
    if (config.output_dir.empty()) throw ConfigError("run config: output_dir is required for training");
    const auto train = prepare_split(config, Split::train);
    const auto valid = prepare_split(config, Split::valid);
    auto result = train_model(config, train, valid, hooks);

    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create " + config.output_dir.string() + ": " + ec.message());
    nlohmann::json run = config;
    run.erase("output_dir");
    save_checkpoint(config.output_dir / "model.ckpt", result.model, {{"run", run}, {"best_epoch", result.best_epoch}});
    save_predictions(config.output_dir / "predictions.csv", result.predictions);
    std::ofstream out(config.output_dir / "metrics.json");
    out << result.metrics.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + (config.output_dir / "metrics.json").string());
    return result;
}

void save_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "case_id,task,plane,split,probability\n";
    for (const auto& r : records)
        out << r.case_id << ',' << to_string(r.task) << ',' << r.plane << ',' << to_string(r.split) << ','
            << format_probability(r.probability) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::vector<PredictionRecord> out;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (lineno == 1 && line.rfind("case_id", 0) == 0)) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        auto bad = [&](const std::string& why) {
            return ParseError(path.string() + ":" + std::to_string(lineno) + ": " + why);
        };
        if (f.size() != 5) throw bad("expected 5 fields");
        const auto task = parse_task(f[1]);
        const auto split = parse_split(f[3]);
        if (!task || !split) throw bad("unknown task or split");
        PredictionRecord r{f[0], *task, f[2], *split, 0.0};
        try {
            std::size_t used = 0;
            r.probability = std::stod(f[4], &used);
            if (used != f[4].size()) throw bad("malformed probability");
        } catch (const std::logic_error&) {
            throw bad("malformed probability");
        }
        if (!(r.probability >= 0.0 && r.probability <= 1.0)) throw bad("probability outside [0, 1]");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace kneenet
