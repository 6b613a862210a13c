// kneenet: synthetic data, training, evaluation, augmentation grid search and
// explorer export.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kneenet/error.hpp"
#include "kneenet/pipeline/config.hpp"
#include "kneenet/pipeline/evaluate.hpp"
#include "kneenet/pipeline/explorer.hpp"
#include "kneenet/pipeline/grid_search.hpp"
#include "kneenet/pipeline/synthetic.hpp"
#include "kneenet/pipeline/train.hpp"
#include "kneenet/simd/kernels.hpp"

namespace fs = std::filesystem;
using namespace kneenet;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knee MRI classification pipeline"};
    app.require_subcommand(1);

    SyntheticSpec synth;
    fs::path synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_cmd->add_option("--cases", synth.cases, "Number of exams (>= 4)")->required();
    synth_cmd->add_option("--seed", synth.seed, "Master seed")->required();
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--size", synth.size, "Slice height and width")->capture_default_str();

    fs::path train_config;
    auto* train_cmd = app.add_subcommand("train", "Train one configuration");
    train_cmd->add_option("--config", train_config, "RunConfig JSON")->required()->check(CLI::ExistingFile);

    EvalRequest eval;
    std::string eval_split = "valid";
    std::optional<fs::path> eval_out;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints");
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "Model checkpoint");
    eval_cmd->add_option("--split", eval_split, "train or valid")->check(CLI::IsMember({"train", "valid"}));
    eval_cmd->add_option("--combine", eval.combine, "Axial, coronal and sagittal checkpoints")->expected(3);
    eval_cmd->add_option("--data", eval.data_root, "Dataset root (defaults to the checkpoint's)");
    eval_cmd->add_option("--out", eval_out, "Write the metrics JSON here as well as to stdout");

    fs::path grid_config, grid_out;
    auto* grid_cmd = app.add_subcommand("grid-search", "Sweep the augmentation probability");
    grid_cmd->add_option("--config", grid_config, "Base RunConfig JSON")->required()->check(CLI::ExistingFile);
    grid_cmd->add_option("--out", grid_out, "Report JSON; the text table goes next to it (.txt)")->required();

    fs::path export_data, export_out;
    std::optional<fs::path> export_preds;
    auto* export_cmd = app.add_subcommand("export-explorer", "Write the explorer bundle");
    export_cmd->add_option("--data", export_data, "Dataset root")->required()->check(CLI::ExistingDirectory);
    export_cmd->add_option("--out", export_out, "Bundle directory")->required();
    export_cmd->add_option("--predictions", export_preds, "predictions.csv to attach")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            const auto m = generate_synthetic(synth, synth_out);
            std::printf("wrote %zu train and %zu valid cases to %s\n", m[0].cases.size(), m[1].cases.size(),
                        synth_out.c_str());
        } else if (*train_cmd) {
            const auto config = load_run_config(train_config);
            std::fprintf(stderr, "training %s on %s isa\n", std::string(to_string(config.config_id)).c_str(),
                         std::string(simd::isa_name(simd::active_isa())).c_str());
            const auto result = run_training(config);
            std::cout << result.metrics.dump(2) << '\n';
        } else if (*eval_cmd) {
            eval.split = *parse_split(eval_split);
            const auto report = evaluate(eval);
            if (eval_out) write_text(*eval_out, report.dump(2) + "\n");
            std::cout << report.dump(2) << '\n';
        } else if (*grid_cmd) {
            const auto config = load_run_config(grid_config);
            const auto report = grid_search(config);
            write_text(grid_out, report.to_json().dump(2) + "\n");
            auto table_path = grid_out;
            table_path.replace_extension(".txt");
            write_text(table_path, report.table());
            std::cout << report.table();
        } else if (*export_cmd) {
            std::vector<PredictionRecord> preds;
            if (export_preds) preds = load_predictions(*export_preds);
            const auto manifest = export_explorer(export_data, export_out, export_preds ? &preds : nullptr);
            std::printf("exported %zu cases to %s\n", manifest.at("cases").size(), export_out.c_str());
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return 0;
}
