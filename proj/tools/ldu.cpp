// Command-line experiment runner: train / eval / sweep / plot over the
// key=value config format. LDU_OUT_ROOT sets the default output root.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ldu/checkpoint.hpp"
#include "ldu/config.hpp"
#include "ldu/experiment.hpp"

namespace {

std::string resolve_out_dir(const ldu::ExperimentSpec& spec, const std::string& out_flag,
                            const std::string& suffix) {
    if (!out_flag.empty()) return out_flag;
    if (const char* root = std::getenv("LDU_OUT_ROOT"); root && *root)
        return (std::filesystem::path(root) / (spec.name + suffix)).string();
    if (!spec.out_dir.empty()) return spec.out_dir;
    return "runs/" + spec.name + suffix;
}

void print_reports(const std::vector<ldu::MetricReport>& rows) {
    std::cout << ldu::kMetricCsvHeader << '\n';
    for (const auto& r : rows) std::cout << ldu::metric_csv_row(r) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prototype-based deterministic uncertainty experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint_path, axis = "lambda", plot_dir;
    std::uint64_t seed = 0;
    std::size_t seeds = 0;
    bool seed_set = false, seeds_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "experiment config file")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "base seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        cmd->add_option("--seeds", seeds, "seed count override")->each([&](const std::string&) {
            seeds_set = true;
        });
    };

    CLI::App* train = app.add_subcommand("train", "train and evaluate an experiment");
    add_common(train);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a saved checkpoint");
    eval->add_option("config", config_path, "experiment config file")->required();
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint to load")->required();
    eval->add_option("--out", out_dir, "output directory");
    eval->add_option("--seed", seed, "evaluation data seed override")->each(
        [&](const std::string&) { seed_set = true; });

    CLI::App* sweep = app.add_subcommand("sweep", "run a sweep over one axis");
    add_common(sweep);
    sweep->add_option("--axis", axis, "lambda | prototypes | loss_toggles");

    CLI::App* plot = app.add_subcommand("plot", "emit SVG plots from run artifacts");
    plot->add_option("dir", plot_dir, "artifacts directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            ldu::ExperimentSpec spec = ldu::parse_config(config_path);
            if (seed_set) spec.seed = seed;
            if (seeds_set) spec.seeds = seeds;
            const auto rows = ldu::run_experiment(spec, resolve_out_dir(spec, out_dir, ""));
            print_reports(rows);
        } else if (eval->parsed()) {
            ldu::ExperimentSpec spec = ldu::parse_config(config_path);
            if (seed_set) spec.seed = seed;
            ldu::LduModel model = ldu::load_checkpoint(checkpoint_path);
            ldu::ExperimentData data = ldu::make_datasets(spec, spec.seed);
            ldu::MetricReport report = ldu::evaluate_run(spec, model, data);
            report.seed = std::to_string(spec.seed);
            print_reports({report});
            const std::string dir =
                out_dir.empty()
                    ? std::filesystem::path(checkpoint_path).parent_path().string()
                    : out_dir;
            if (!dir.empty()) {
                std::filesystem::create_directories(dir);
                std::ofstream out(std::filesystem::path(dir) / "eval_metrics.csv");
                out << ldu::kMetricCsvHeader << '\n' << ldu::metric_csv_row(report) << '\n';
            }
        } else if (sweep->parsed()) {
            ldu::ExperimentSpec spec = ldu::parse_config(config_path);
            if (seed_set) spec.seed = seed;
            if (seeds_set) spec.seeds = seeds;
            const auto rows = ldu::run_sweep(spec, ldu::sweep_axis_from_string(axis),
                                             resolve_out_dir(spec, out_dir, "_sweep"));
            std::size_t failed = 0;
            for (const auto& row : rows)
                if (row.failed) {
                    ++failed;
                    std::cerr << "sweep point " << row.axis << "=" << row.value
                              << " failed: " << row.error << '\n';
                }
            std::cout << "sweep rows: " << rows.size() << " (" << failed << " failed)\n";
        } else if (plot->parsed()) {
            for (const auto& path : ldu::emit_plots(plot_dir)) std::cout << path << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
