#include "kneenet/pipeline/evaluate.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "kneenet/error.hpp"
#include "kneenet/model/checkpoint.hpp"
#include "kneenet/pipeline/prepare.hpp"
#include "kneenet/pipeline/train.hpp"

namespace kneenet {

namespace {

struct Loaded {
    RunConfig config;
    Network<float> model;
};

Loaded load_run(const std::filesystem::path& path, const EvalRequest& req) {
    auto ck = load_checkpoint(path);
    if (!ck.meta.contains("run")) throw ConfigError(path.string() + ": checkpoint carries no run configuration");
    RunConfig config = ck.meta.at("run").get<RunConfig>();
    if (req.data_root) config.data_root = *req.data_root;
    const nlohmann::json stored = ck.model.config(), expected = config.model;
    if (stored != expected) throw ConfigError(path.string() + ": model config does not match its run configuration");
    return {std::move(config), std::move(ck.model)};
}

std::map<std::string, int> label_map(const PreparedSplit& data, Task task) {
    std::map<std::string, int> out;
    for (const auto& c : data.cases) out[c.id] = c.labels[index_of(task)];
    return out;
}

// case id -> per-plane probabilities, in kAllPlanes order.
std::map<std::string, std::array<double, 3>> gather(const std::vector<PredictionRecord>& records, Task task) {
    std::map<std::string, std::array<double, 3>> out;
    std::map<std::string, std::array<bool, 3>> seen;
    for (const auto& r : records) {
        if (r.task != task) continue;
        const auto plane = parse_plane(r.plane);
        if (!plane) throw IntegrityError("combiner input has non-plane record '" + r.plane + "'");
        auto& s = seen[r.case_id];
        if (s[index_of(*plane)]) throw IntegrityError("duplicate " + r.plane + " prediction for " + r.case_id);
        s[index_of(*plane)] = true;
        out[r.case_id][index_of(*plane)] = r.probability;
    }
    for (const auto& [id, s] : seen)
        if (!(s[0] && s[1] && s[2])) throw IntegrityError("case " + id + " lacks a prediction for some plane");
    return out;
}

}  // namespace

RunConfig checkpoint_run_config(const std::filesystem::path& checkpoint) {
    const auto ck = load_checkpoint(checkpoint);
    if (!ck.meta.contains("run")) throw ConfigError(checkpoint.string() + ": checkpoint carries no run configuration");
    return ck.meta.at("run").get<RunConfig>();
}

CombinedScore combine_planes(const std::vector<PredictionRecord>& fit, const std::map<std::string, int>& fit_labels,
                             const std::vector<PredictionRecord>& score,
                             const std::map<std::string, int>& score_labels, Task task, double lambda) {
    auto to_xy = [&](const std::vector<PredictionRecord>& recs, const std::map<std::string, int>& labels) {
        std::vector<std::string> ids;
        std::vector<std::array<double, 3>> x;
        std::vector<int> y;
        for (const auto& [id, probs] : gather(recs, task)) {
            const auto it = labels.find(id);
            if (it == labels.end()) throw IntegrityError("no label for case " + id);
            ids.push_back(id);
            x.push_back(probs);
            y.push_back(it->second);
        }
        return std::tuple{ids, x, y};
    };
    const auto [fit_ids, fx, fy] = to_xy(fit, fit_labels);
    const auto [ids, sx, sy] = to_xy(score, score_labels);

    CombinedScore out;
    out.fit = fit_logreg(fx, fy, lambda);
    std::vector<double> probs;
    const Split split = score.empty() ? Split::valid : score.front().split;
    for (std::size_t i = 0; i < sx.size(); ++i) {
        probs.push_back(predict_logreg(out.fit.model, sx[i]));
        out.predictions.push_back({ids[i], task, "combined", split, probs.back()});
    }
    out.auc = auc(probs, sy);
    return out;
}

nlohmann::json evaluate(const EvalRequest& req) {
    if (!req.checkpoint && req.combine.empty()) throw UsageError("eval: --checkpoint or --combine is required");
    if (!req.combine.empty() && req.combine.size() != 3)
        throw UsageError("eval: --combine takes exactly three checkpoints (axial, coronal, sagittal)");

    if (req.combine.empty()) {
        auto run = load_run(*req.checkpoint, req);
        const auto data = prepare_split(run.config, req.split);
        const auto preds = make_predictions(run.config, run.model, data);
        const auto aucs = auc_by_task(run.config, preds, data);
        nlohmann::json task_auc = nlohmann::json::object();
        double mean = 0.0;
        for (std::size_t t = 0; t < aucs.size(); ++t) {
            task_auc[std::string(to_string(run.config.tasks[t]))] = aucs[t];
            mean += aucs[t] / static_cast<double>(aucs.size());
        }
        return {{"config_id", to_string(run.config.config_id)},
                {"task", run.config.tasks.size() == 1 ? std::string(to_string(run.config.tasks[0])) : "all"},
                {"plane", prediction_plane(run.config)},
                {"split", to_string(req.split)},
                {"auc", mean},
                {"task_auc", task_auc}};
    }

    std::vector<Loaded> runs;
    for (const auto& p : req.combine) runs.push_back(load_run(p, req));
    if (req.checkpoint) {
        const auto extra = load_run(*req.checkpoint, req);
        const bool listed = std::any_of(runs.begin(), runs.end(), [&](const Loaded& r) {
            return nlohmann::json(r.config) == nlohmann::json(extra.config);
        });
        if (!listed) throw ConfigError("eval: --checkpoint must be one of the --combine checkpoints");
    }
    const Task task = runs.front().config.tasks.front();
    std::set<Plane> planes;
    for (const auto& r : runs) {
        if (r.config.stacked()) throw ConfigError("eval: --combine needs per-plane checkpoints, not stacked ones");
        if (r.config.tasks.front() != task) throw ConfigError("eval: combined checkpoints disagree on the task");
        if (!planes.insert(r.config.planes.front()).second)
            throw ConfigError("eval: plane " + std::string(to_string(r.config.planes.front())) + " given twice");
    }
    const Split fit_split = runs.front().config.combiner_fit_split;

    std::vector<PredictionRecord> fit_preds, score_preds;
    std::map<std::string, int> fit_labels, score_labels;
    nlohmann::json plane_rows = nlohmann::json::array();
    std::sort(runs.begin(), runs.end(),
              [](const Loaded& a, const Loaded& b) { return a.config.planes.front() < b.config.planes.front(); });
    for (const auto& r : runs) {
        const auto score_data = prepare_split(r.config, req.split);
        auto sp = make_predictions(r.config, r.model, score_data);
        score_labels = label_map(score_data, task);
        plane_rows.push_back({{"plane", to_string(r.config.planes.front())},
                              {"auc", auc_by_task(r.config, sp, score_data).front()}});
        score_preds.insert(score_preds.end(), sp.begin(), sp.end());
        if (fit_split == req.split) {
            fit_preds.insert(fit_preds.end(), sp.begin(), sp.end());
            fit_labels = score_labels;
        } else {
            const auto fit_data = prepare_split(r.config, fit_split);
            const auto fp = make_predictions(r.config, r.model, fit_data);
            fit_preds.insert(fit_preds.end(), fp.begin(), fp.end());
            fit_labels = label_map(fit_data, task);
        }
    }
    const auto combined = combine_planes(fit_preds, fit_labels, score_preds, score_labels, task);
    return {{"task", to_string(task)},
            {"split", to_string(req.split)},
            {"planes", plane_rows},
            {"combined",
             {{"auc", combined.auc},
              {"fit_split", to_string(fit_split)},
              {"combiner", combined.fit.model},
              {"gradient_norm", combined.fit.gradient_norm},
              {"converged", combined.fit.converged}}}};
}

}  // namespace kneenet
