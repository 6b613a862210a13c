#include "kneenet/pipeline/grid_search.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "kneenet/error.hpp"
#include "kneenet/pipeline/evaluate.hpp"
#include "kneenet/pipeline/train.hpp"

namespace kneenet {

namespace {

constexpr std::size_t kGridSteps = 20;
constexpr std::uint64_t kGridStream = 4;

struct Job {
    std::string task, plane;
    RunConfig config;  // tasks/planes narrowed, p unset
};

}  // namespace

std::vector<double> grid_values() {
    std::vector<double> out;
    for (std::size_t k = 0; k <= kGridSteps; ++k) out.push_back(static_cast<double>(k) / kGridSteps);
    return out;
}

std::optional<std::size_t> choose_cell(const std::vector<GridCell>& cells) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!cells[i].auc) continue;
        const auto& b = best ? cells[*best] : cells[i];
        if (!best || *cells[i].auc > *b.auc || (*cells[i].auc == *b.auc && cells[i].p < b.p)) best = i;
    }
    return best;
}

std::string percent_label(double p) { return std::to_string(std::lround(p * 100.0)) + "%"; }

nlohmann::json GridSearchReport::to_json() const {
    nlohmann::json entries_json = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json cells_json = nlohmann::json::array();
        for (const auto& c : e.cells) {
            nlohmann::json cell{{"p", c.p}, {"auc", c.auc ? nlohmann::json(*c.auc) : nlohmann::json(nullptr)}};
            if (!c.error.empty()) cell["error"] = c.error;
            cells_json.push_back(cell);
        }
        nlohmann::json entry{{"task", e.task}, {"plane", e.plane}, {"cells", cells_json}};
        if (e.chosen) {
            entry["chosen_p"] = e.cells[*e.chosen].p;
            entry["chosen_percent"] = percent_label(e.cells[*e.chosen].p);
            entry["chosen_auc"] = *e.cells[*e.chosen].auc;
        } else {
            entry["chosen_p"] = nullptr;
            entry["chosen_percent"] = nullptr;
            entry["chosen_auc"] = nullptr;
        }
        entries_json.push_back(entry);
    }
    nlohmann::json combined = nlohmann::json::object();
    for (const auto& [task, value] : combined_auc) combined[task] = value;
    return {{"config_id", to_string(config_id)},
            {"epochs", epochs},
            {"p_values", grid_values()},
            {"entries", entries_json},
            {"combined_auc", combined}};
}

std::string GridSearchReport::table() const {
    std::vector<std::string> tasks, planes;
    auto add = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    for (const auto& e : entries) {
        add(tasks, e.task);
        add(planes, e.plane);
    }
    auto title = [](std::string s) {
        if (s == "acl") return std::string("ACL");
        if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return s;
    };
    std::ostringstream out;
    out << "Percentages of images augmented for each task and plane\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-10s", "Task");
    out << buf;
    for (const auto& p : planes) {
        std::snprintf(buf, sizeof buf, "%10s", title(p).c_str());
        out << buf;
    }
    out << '\n';
    for (const auto& t : tasks) {
        std::snprintf(buf, sizeof buf, "%-10s", title(t).c_str());
        out << buf;
        for (const auto& p : planes) {
            std::string cell = "-";
            for (const auto& e : entries)
                if (e.task == t && e.plane == p) cell = e.chosen ? percent_label(e.cells[*e.chosen].p) : "failed";
            std::snprintf(buf, sizeof buf, "%10s", cell.c_str());
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

GridSearchReport grid_search(const RunConfig& base) {
    GridSearchReport report;
    report.config_id = base.config_id;
    report.epochs = base.epochs;

    std::vector<Job> jobs;
    if (base.config_id == ConfigId::c44) {
        jobs.push_back({"all", "all", base});
    } else if (base.stacked()) {
        for (Task t : base.tasks) {
            RunConfig c = base;
            c.tasks = {t};
            jobs.push_back({std::string(to_string(t)), "all", c});
        }
    } else {
        for (Task t : base.tasks)
            for (Plane p : base.planes) {
                RunConfig c = base;
                c.tasks = {t};
                c.planes = {p};
                jobs.push_back({std::string(to_string(t)), std::string(to_string(p)), c});
            }
    }
    // The base may list several tasks and planes; each job must be a valid run on its own.
    for (const auto& job : jobs) job.config.validate();

    // Predictions of each entry's chosen cell, for the plane combiner.
    std::map<std::string, std::vector<PredictionRecord>> chosen_preds;
    std::map<std::string, std::array<std::map<std::string, int>, 2>> labels;  // task -> split -> id -> label
    bool any_ok = false;
    const auto ps = grid_values();
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& job = jobs[j];
        GridEntry entry{job.task, job.plane, {}, std::nullopt};
        std::vector<std::vector<PredictionRecord>> cell_preds(ps.size());
        std::optional<PreparedSplit> train, valid;
        std::string prep_error;
        try {
            train = prepare_split(job.config, Split::train);
            valid = prepare_split(job.config, Split::valid);
        } catch (const std::exception& e) {
            prep_error = e.what();
        }
        for (std::size_t k = 0; k < ps.size(); ++k) {
            GridCell cell;
            cell.p = ps[k];
            if (!prep_error.empty()) {
                cell.error = prep_error;
                entry.cells.push_back(cell);
                continue;
            }
            try {
                RunConfig c = job.config;
                c.augmentation.p = ps[k];
                c.seed = derive_seed(base.seed, {kGridStream, j, k});
                auto result = train_model(c, *train, *valid);
                cell.auc = result.metrics.at("auc").get<double>();
                cell_preds[k] = std::move(result.predictions);
                any_ok = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            entry.cells.push_back(cell);
        }
        entry.chosen = choose_cell(entry.cells);
        if (entry.chosen && !job.config.stacked()) {
            auto& dst = chosen_preds[job.task];
            dst.insert(dst.end(), cell_preds[*entry.chosen].begin(), cell_preds[*entry.chosen].end());
            const Task task = job.config.tasks.front();
            for (const auto* data : {&*train, &*valid})
                for (const auto& c : data->cases) labels[job.task][index_of(data->split)][c.id] = c.labels[index_of(task)];
        }
        report.entries.push_back(std::move(entry));
    }
    if (!any_ok) throw SearchError("grid search: every cell failed");

    if (!base.stacked() && base.planes.size() == 3) {
        for (Task t : base.tasks) {
            const std::string name(to_string(t));
            const auto it = chosen_preds.find(name);
            std::size_t planes_ok = 0;
            for (const auto& e : report.entries)
                if (e.task == name && e.chosen) ++planes_ok;
            if (it == chosen_preds.end() || planes_ok != 3) continue;
            std::vector<PredictionRecord> fit, score;
            for (const auto& r : it->second) {
                if (r.split == base.combiner_fit_split) fit.push_back(r);
                if (r.split == Split::valid) score.push_back(r);
            }
            try {
                const auto& lab = labels[name];
                const auto combined = combine_planes(fit, lab[index_of(base.combiner_fit_split)], score,
                                                     lab[index_of(Split::valid)], t);
                report.combined_auc.emplace_back(name, combined.auc);
            } catch (const Error&) {
                // A combiner that cannot be fitted leaves the task without a combined score.
            }
        }
    }
    return report;
}

}  // namespace kneenet
