#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kneenet/pipeline/config.hpp"

namespace kneenet {

struct GridCell {
    double p = 0.0;
    std::optional<double> auc;  // empty when the cell failed
    std::string error;
};

struct GridEntry {
    std::string task;   // task name, or "all" for a jointly trained multi-task model
    std::string plane;  // plane name, or "all" for stacked inputs
    std::vector<GridCell> cells;
    std::optional<std::size_t> chosen;  // index into cells
};

struct GridSearchReport {
    ConfigId config_id = ConfigId::c42;
    std::size_t epochs = 0;
    std::vector<GridEntry> entries;
    std::vector<std::pair<std::string, double>> combined_auc;  // per task, when all three planes were searched

    nlohmann::json to_json() const;
    /// Table of chosen augmentation percentages, tasks by plane.
    std::string table() const;
};

/// The 21 grid values 0, 0.05, ..., 1 (computed as k / 20).
std::vector<double> grid_values();

/// Highest AUC, smallest p on ties; empty when every cell failed.
std::optional<std::size_t> choose_cell(const std::vector<GridCell>& cells);

/// "75%" style label.
std::string percent_label(double p);

/// Trains one model per (task, plane, p). A failing cell is recorded and the
/// sweep continues; SearchError when every cell fails. For c41/c42 the base
/// may list several tasks and planes (one entry each); for c43 several tasks.
GridSearchReport grid_search(const RunConfig& base);

}  // namespace kneenet
