#pragma once
// Experiment orchestration: dataset construction from a spec, the per-seed
// train/evaluate loop with artifact emission (checkpoint, history CSV,
// metric CSV, projection/grid CSVs and SVG plots), sweep harnesses over
// lambda / prototype count / loss toggles, and CSV-driven plot emission.
// Everything is deterministic given the spec, so reruns produce
// byte-identical CSVs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/analysis.hpp"
#include "ldu/checkpoint.hpp"
#include "ldu/config.hpp"
#include "ldu/datasets.hpp"
#include "ldu/metrics.hpp"
#include "ldu/model.hpp"
#include "ldu/svg.hpp"
#include "ldu/train.hpp"

namespace ldu {

struct ExperimentData {
    Dataset train;
    Dataset test;
    std::optional<Dataset> ood;
};

namespace exp_detail {

// sub-stream tags for deriving per-seed randomness
inline constexpr std::uint64_t kTrainData = 0xD0, kTestData = 0xD1, kOodData = 0xD2,
                               kModelInit = 0xD3, kTraining = 0xD4, kOutliers = 0xD5,
                               kBlobMeans = 0xD6;

inline void retag_ood(Dataset& ds) {
    ds.tags.assign(ds.size(), DomainTag::kOutOfDistribution);
}

}  // namespace exp_detail

inline ExperimentData make_datasets(const ExperimentSpec& spec, std::uint64_t run_seed) {
    namespace ed = exp_detail;
    ExperimentData data;
    switch (spec.dataset) {
        case DatasetKind::kTwoMoons: {
            data.train = two_moons(spec.n_train, spec.noise, mix_seed(run_seed, ed::kTrainData));
            data.test = two_moons(spec.n_test, spec.noise, mix_seed(run_seed, ed::kTestData));
            break;
        }
        case DatasetKind::kGaussianBlobs: {
            const std::uint64_t means = mix_seed(run_seed, ed::kBlobMeans);
            const std::size_t per_train =
                std::max<std::size_t>(1, spec.n_train / spec.blob_classes);
            const std::size_t per_test =
                std::max<std::size_t>(1, spec.n_test / spec.blob_classes);
            data.train = gaussian_blobs(spec.blob_classes, per_train, spec.blob_dim,
                                        spec.blob_spread, mix_seed(run_seed, ed::kTrainData),
                                        0.0, means);
            data.test = gaussian_blobs(spec.blob_classes, per_test, spec.blob_dim,
                                       spec.blob_spread, mix_seed(run_seed, ed::kTestData), 0.0,
                                       means);
            if (spec.ood == OodKind::kShiftedBlobs) {
                const std::size_t per_ood =
                    std::max<std::size_t>(1, spec.ood_n / spec.blob_classes);
                Dataset ood = gaussian_blobs(spec.blob_classes, per_ood, spec.blob_dim,
                                             spec.blob_spread, mix_seed(run_seed, ed::kOodData),
                                             spec.blob_shift, means);
                ed::retag_ood(ood);
                ood.descriptor = "shifted_blobs";
                data.ood = std::move(ood);
            }
            break;
        }
        case DatasetKind::kSinusoid: {
            data.train = sinusoid_regression(spec.n_train, spec.x_lo, spec.x_hi, spec.noise_mode,
                                             mix_seed(run_seed, ed::kTrainData),
                                             spec.noise_scale);
            data.test = sinusoid_regression(spec.n_test, spec.x_lo, spec.x_hi, spec.noise_mode,
                                            mix_seed(run_seed, ed::kTestData), spec.noise_scale);
            break;
        }
        case DatasetKind::kCsv: {
            data.train = read_dataset_csv(spec.train_csv);
            Dataset test = read_dataset_csv(spec.test_csv);
            // OOD-tagged rows of the test file become the OOD set
            Dataset id, ood;
            id.dim = ood.dim = test.dim;
            for (std::size_t i = 0; i < test.size(); ++i) {
                Dataset& dst = test.tags[i] == DomainTag::kInDistribution ? id : ood;
                dst.inputs.insert(dst.inputs.end(), test.row(i).begin(), test.row(i).end());
                dst.targets.push_back(test.targets[i]);
                dst.tags.push_back(test.tags[i]);
            }
            id.descriptor = spec.test_csv;
            data.test = std::move(id);
            if (ood.size() > 0) {
                ood.descriptor = spec.test_csv + " (ood rows)";
                data.ood = std::move(ood);
            }
            break;
        }
    }
    if (spec.ood == OodKind::kRing)
        data.ood = ood_ring(spec.ood_n, spec.ring_cx, spec.ring_cy, spec.ring_inner,
                            spec.ring_outer, mix_seed(run_seed, ed::kOodData));
    return data;
}

namespace exp_detail {

inline std::vector<std::size_t> predicted_labels(const ModelOutput& out) {
    const std::size_t b = out.logits.rows(), c = out.logits.cols();
    std::vector<std::size_t> pred(b);
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (out.logits.value(i, j) > out.logits.value(i, best)) best = j;
        pred[i] = best;
    }
    return pred;
}

// OOD score: the configured epistemic score for LDU models, MCP-based
// aleatoric for plain ones.
inline std::vector<double> ood_scores(const ExperimentSpec& spec, const LduModel& model,
                                      const ModelOutput& out) {
    if (model.spec.kind == ModelKind::kLdu) return epistemic_score(out, spec.epistemic_mode);
    return aleatoric_score(out, Task::kClassification);
}

}  // namespace exp_detail

inline MetricReport evaluate_run(const ExperimentSpec& spec, const LduModel& model,
                                 const ExperimentData& data) {
    MetricReport report;
    report.name = spec.name;
    report.n_id = data.test.size();
    report.n_ood = data.ood ? data.ood->size() : 0;

    ModelOutput out_test = forward_full(model, data.test.all_inputs());
    if (spec.task == Task::kClassification) {
        std::vector<std::size_t> truth(data.test.size());
        for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = data.test.label(i);
        const auto pred = exp_detail::predicted_labels(out_test);
        report.accuracy = accuracy(pred, truth);

        const auto alea = aleatoric_score(out_test, Task::kClassification);
        std::vector<double> confidence(alea.size());
        std::vector<bool> correct(alea.size());
        for (std::size_t i = 0; i < alea.size(); ++i) {
            confidence[i] = 1.0 - alea[i];
            correct[i] = pred[i] == truth[i];
        }
        report.ece = ece(confidence, correct, spec.ece_bins);

        if (data.ood) {
            ModelOutput out_ood = forward_full(model, data.ood->all_inputs());
            const auto id_scores = exp_detail::ood_scores(spec, model, out_test);
            const auto ood_scores = exp_detail::ood_scores(spec, model, out_ood);
            report.auroc = auroc(ood_scores, id_scores);
            report.aupr = aupr(ood_scores, id_scores);
            report.fpr_at_95_tpr = fpr_at_95_tpr(ood_scores, id_scores);
        }
    } else {
        std::vector<double> errors(data.test.size());
        double min_abs_target = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < errors.size(); ++i) {
            errors[i] = std::abs(out_test.logits.value(i, 0) - data.test.targets[i]);
            min_abs_target = std::min(min_abs_target, std::abs(data.test.targets[i]));
        }
        // plain regression models carry no uncertainty head; they rank as a
        // constant-uncertainty baseline
        const std::vector<double> unc =
            model.spec.kind == ModelKind::kLdu
                ? aleatoric_score(out_test, Task::kRegression)
                : std::vector<double>(errors.size(), 0.5);
        report.ause_rmse = ause(errors, unc, AuseKind::kRmse, spec.ause_steps);
        if (min_abs_target > 1e-9)
            report.ause_absrel =
                ause(errors, unc, AuseKind::kAbsRel, spec.ause_steps, data.test.targets);
        if (data.ood && model.spec.kind == ModelKind::kLdu) {
            ModelOutput out_ood = forward_full(model, data.ood->all_inputs());
            const auto id_scores = aleatoric_score(out_test, Task::kRegression);
            const auto ood_scores = aleatoric_score(out_ood, Task::kRegression);
            report.auroc = auroc(ood_scores, id_scores);
            report.aupr = aupr(ood_scores, id_scores);
            report.fpr_at_95_tpr = fpr_at_95_tpr(ood_scores, id_scores);
        }
    }
    return report;
}

namespace exp_detail {

inline void write_projection_csv(const std::string& path, const PcaResult& pca,
                                 const std::vector<std::size_t>& labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_projection_csv: cannot open " + path);
    out << "pc1,pc2,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << fmt17(pca.projection[i * 2]) << ',' << fmt17(pca.projection[i * 2 + 1]) << ','
            << labels[i] << '\n';
}

inline void write_grid_csv(const std::string& path, const ConfidenceGrid& grid) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_grid_csv: cannot open " + path);
    out << "x,y,score\n";
    for (std::size_t yi = 0; yi < grid.resolution; ++yi)
        for (std::size_t xi = 0; xi < grid.resolution; ++xi)
            out << fmt17(grid.xs[xi]) << ',' << fmt17(grid.ys[yi]) << ','
                << fmt17(grid.values[yi * grid.resolution + xi]) << '\n';
}

}  // namespace exp_detail

// Feature-collapse diagnostic: PCA of the pre-logit features (the exp(-DM)
// embedding for LDU models, the latent activations for plain ones) with the
// silhouette of the class labels in the projection.
inline CollapseReport collapse_report(const LduModel& model, const Dataset& ds,
                                      const std::string& descriptor) {
    ModelOutput out = forward_full(model, ds.all_inputs());
    const Tensor& feats = out.embedding;
    CollapseReport report;
    report.pca = pca_2d(std::vector<double>(feats.values().begin(), feats.values().end()),
                        feats.rows(), feats.cols());
    std::vector<std::size_t> labels(ds.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = ds.label(i);
    report.separation_score = collapse_score(report.pca.projection, labels);
    report.model_descriptor = descriptor;
    return report;
}

namespace exp_detail {

inline GridBounds data_bounds(const ExperimentData& data) {
    GridBounds b{data.train.inputs[0], data.train.inputs[0], data.train.inputs[1],
                 data.train.inputs[1]};
    auto absorb = [&b](const Dataset& ds) {
        for (std::size_t i = 0; i < ds.size(); ++i) {
            b.x_lo = std::min(b.x_lo, ds.inputs[i * 2]);
            b.x_hi = std::max(b.x_hi, ds.inputs[i * 2]);
            b.y_lo = std::min(b.y_lo, ds.inputs[i * 2 + 1]);
            b.y_hi = std::max(b.y_hi, ds.inputs[i * 2 + 1]);
        }
    };
    absorb(data.train);
    absorb(data.test);
    if (data.ood) absorb(*data.ood);
    const double pad_x = 0.1 * (b.x_hi - b.x_lo), pad_y = 0.1 * (b.y_hi - b.y_lo);
    return {b.x_lo - pad_x, b.x_hi + pad_x, b.y_lo - pad_y, b.y_hi + pad_y};
}

inline MetricReport mean_report(const std::vector<MetricReport>& rows) {
    MetricReport m;
    m.name = rows.front().name;
    m.seed = "mean";
    m.n_id = rows.front().n_id;
    m.n_ood = rows.front().n_ood;
    auto average = [&rows](double MetricReport::*field) {
        double sum = 0.0;
        for (const auto& r : rows) {
            if (!std::isfinite(r.*field)) return std::numeric_limits<double>::quiet_NaN();
            sum += r.*field;
        }
        return sum / static_cast<double>(rows.size());
    };
    m.accuracy = average(&MetricReport::accuracy);
    m.ece = average(&MetricReport::ece);
    m.auroc = average(&MetricReport::auroc);
    m.aupr = average(&MetricReport::aupr);
    m.fpr_at_95_tpr = average(&MetricReport::fpr_at_95_tpr);
    m.ause_rmse = average(&MetricReport::ause_rmse);
    m.ause_absrel = average(&MetricReport::ause_absrel);
    return m;
}

}  // namespace exp_detail

// Plot emission from the CSV artifacts in a directory. Returns the emitted
// SVG paths; errors if none of the known inputs are present.
inline std::vector<std::string> emit_plots(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> written;

    const fs::path projection = fs::path(dir) / "projection.csv";
    const fs::path grid_csv = fs::path(dir) / "grid.csv";
    const fs::path history = fs::path(dir) / "history.csv";

    if (fs::exists(projection)) {
        std::ifstream in(projection.string());
        std::string line;
        std::getline(in, line);
        if (trim(line) != "pc1,pc2,label")
            throw std::runtime_error("emit_plots: " + projection.string() +
                                     " has unexpected header '" + trim(line) + "'");
        std::vector<double> points;
        std::vector<std::size_t> labels;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            const auto cells = split(trim(line), ',');
            if (cells.size() != 3)
                throw std::runtime_error("emit_plots: " + projection.string() + ":" +
                                         std::to_string(line_no) + ": expected 3 columns");
            const std::string ctx = projection.string() + ":" + std::to_string(line_no);
            points.push_back(parse_double(cells[0], ctx));
            points.push_back(parse_double(cells[1], ctx));
            labels.push_back(static_cast<std::size_t>(parse_double(cells[2], ctx)));
        }
        const std::string svg = (fs::path(dir) / "pca_projection.svg").string();
        write_scatter_svg(svg, points, labels, "pre-logit PCA projection");
        written.push_back(svg);
    }

    if (fs::exists(grid_csv)) {
        std::ifstream in(grid_csv.string());
        std::string line;
        std::getline(in, line);
        if (trim(line) != "x,y,score")
            throw std::runtime_error("emit_plots: " + grid_csv.string() +
                                     " has unexpected header '" + trim(line) + "'");
        std::vector<double> xs, ys, values;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            const auto cells = split(trim(line), ',');
            if (cells.size() != 3)
                throw std::runtime_error("emit_plots: " + grid_csv.string() + ":" +
                                         std::to_string(line_no) + ": expected 3 columns");
            const std::string ctx = grid_csv.string() + ":" + std::to_string(line_no);
            xs.push_back(parse_double(cells[0], ctx));
            ys.push_back(parse_double(cells[1], ctx));
            values.push_back(parse_double(cells[2], ctx));
        }
        const std::size_t res = static_cast<std::size_t>(std::lround(std::sqrt(
            static_cast<double>(values.size()))));
        if (res * res != values.size() || res < 2)
            throw std::runtime_error("emit_plots: " + grid_csv.string() +
                                     " does not hold a square lattice");

        // optional data overlay
        std::vector<double> overlay_points;
        std::vector<std::size_t> overlay_labels;
        const fs::path data_csv = fs::path(dir) / "test_data.csv";
        if (fs::exists(data_csv)) {
            Dataset ds = read_dataset_csv(data_csv.string());
            if (ds.dim == 2) {
                overlay_points = ds.inputs;
                overlay_labels.resize(ds.size());
                for (std::size_t i = 0; i < ds.size(); ++i) overlay_labels[i] = ds.label(i);
            }
        }
        const std::string svg = (fs::path(dir) / "confidence_grid.svg").string();
        write_heatmap_svg(svg, values, res, xs.front(), xs.back(), ys.front(), ys.back(),
                          overlay_points, overlay_labels, "confidence grid");
        written.push_back(svg);
    }

    if (fs::exists(history)) {
        std::ifstream in(history.string());
        std::string line;
        std::getline(in, line);
        if (trim(line) != "epoch,task,dis,entrop,unc,total,accuracy")
            throw std::runtime_error("emit_plots: " + history.string() +
                                     " has unexpected header '" + trim(line) + "'");
        std::vector<std::vector<double>> series(5);
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            const auto cells = split(trim(line), ',');
            if (cells.size() != 7)
                throw std::runtime_error("emit_plots: " + history.string() + ":" +
                                         std::to_string(line_no) + ": expected 7 columns");
            const std::string ctx = history.string() + ":" + std::to_string(line_no);
            for (int c = 0; c < 5; ++c)
                series[c].push_back(parse_double(cells[c + 1], ctx));
        }
        const char* names[5] = {"task", "dis", "entrop", "unc", "total"};
        for (int c = 0; c < 5; ++c) {
            const std::string svg =
                (fs::path(dir) / ("loss_" + std::string(names[c]) + ".svg")).string();
            write_line_chart_svg(svg, series[c], "loss: " + std::string(names[c]));
            written.push_back(svg);
        }
    }

    if (written.empty())
        throw std::runtime_error(
            "emit_plots: no plot inputs in " + dir +
            " (expected projection.csv, grid.csv, or history.csv)");
    return written;
}

struct SeedRun {
    std::uint64_t seed{0};
    MetricReport report;
};

// One full experiment: for every seed, build datasets and model, run stage-1
// (and optional stage-2) training, evaluate, and emit artifacts under
// out_dir/seed_<seed>/. metrics.csv collects the per-seed rows plus a mean
// row. Returns all rows, mean last.
inline std::vector<MetricReport> run_experiment(const ExperimentSpec& spec_in,
                                                const std::string& out_dir_override = "") {
    namespace fs = std::filesystem;
    ExperimentSpec spec = spec_in;
    if (!out_dir_override.empty()) spec.out_dir = out_dir_override;
    if (spec.out_dir.empty()) spec.out_dir = "runs/" + spec.name;
    fs::create_directories(spec.out_dir);

    {
        std::ofstream cfg((fs::path(spec.out_dir) / "config.conf").string());
        cfg << serialize_config(spec);
    }

    std::vector<MetricReport> rows;
    for (std::size_t s = 0; s < spec.seeds; ++s) {
        const std::uint64_t run_seed = spec.seed + s;
        ExperimentData data = make_datasets(spec, run_seed);

        LduModel model = build_model(spec.model_spec(mix_seed(run_seed, exp_detail::kModelInit)));
        TrainConfig cfg = spec.train_config(mix_seed(run_seed, exp_detail::kTraining));
        TrainHistory history = train_stage1(model, data.train, cfg, &data.test);
        if (cfg.stage2) {
            Dataset outliers = synthesize_outliers(data.train, cfg.stage2->noise_scale,
                                                   mix_seed(run_seed, exp_detail::kOutliers));
            TrainHistory stage2 = train_stage2_unc_only(model, data.train, outliers, cfg);
            for (auto rec : stage2.records) {
                rec.epoch += spec.epochs;
                history.records.push_back(rec);
            }
        }

        MetricReport report = evaluate_run(spec, model, data);
        report.seed = std::to_string(run_seed);
        rows.push_back(report);

        const fs::path seed_dir = fs::path(spec.out_dir) / ("seed_" + std::to_string(run_seed));
        fs::create_directories(seed_dir);
        save_checkpoint(model, (seed_dir / "checkpoint.txt").string());
        write_history_csv(history, (seed_dir / "history.csv").string());
        write_dataset_csv(data.test, (seed_dir / "test_data.csv").string());

        if (spec.plots) {
            if (spec.task == Task::kClassification) {
                CollapseReport collapse = collapse_report(model, data.test, spec.name);
                std::vector<std::size_t> labels(data.test.size());
                for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = data.test.label(i);
                exp_detail::write_projection_csv((seed_dir / "projection.csv").string(),
                                                 collapse.pca, labels);
            }
            if (data.train.dim == 2) {
                const ScoreKind kind = spec.model == ModelKind::kLdu
                                           ? (spec.stage2 ? ScoreKind::kEpistemicUncHead
                                                          : ScoreKind::kAleatoric)
                                           : ScoreKind::kAleatoric;
                ConfidenceGrid grid = confidence_grid(model, kind, exp_detail::data_bounds(data),
                                                      spec.grid_resolution);
                exp_detail::write_grid_csv((seed_dir / "grid.csv").string(), grid);
            }
            emit_plots(seed_dir.string());
        }
    }

    rows.push_back(exp_detail::mean_report(rows));
    std::ofstream out((fs::path(spec.out_dir) / "metrics.csv").string());
    if (!out) throw std::runtime_error("run_experiment: cannot write metrics.csv");
    out << kMetricCsvHeader << '\n';
    for (const auto& r : rows) out << metric_csv_row(r) << '\n';
    return rows;
}

// ---------------------------------------------------------------------------
// sweeps

enum class SweepAxis { kLambda, kPrototypes, kLossToggles };

struct SweepRow {
    std::string axis;
    std::string value;
    bool failed{false};
    std::string error;
    MetricReport report;
};

inline SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "lambda") return SweepAxis::kLambda;
    if (name == "prototypes") return SweepAxis::kPrototypes;
    if (name == "loss_toggles") return SweepAxis::kLossToggles;
    throw std::runtime_error("unknown sweep axis '" + name +
                             "' (expected lambda, prototypes, or loss_toggles)");
}

// One run_experiment per grid point; failures are recorded and the sweep
// continues. Rows (per seed + mean, keyed by axis value) land in sweep.csv.
inline std::vector<SweepRow> run_sweep(const ExperimentSpec& base, SweepAxis axis,
                                       const std::string& out_dir_override = "") {
    namespace fs = std::filesystem;
    ExperimentSpec root = base;
    if (!out_dir_override.empty()) root.out_dir = out_dir_override;
    if (root.out_dir.empty()) root.out_dir = "runs/" + root.name + "_sweep";
    fs::create_directories(root.out_dir);

    struct Point {
        std::string label;
        ExperimentSpec spec;
    };
    std::vector<Point> points;
    if (axis == SweepAxis::kLambda) {
        if (base.lambda_values.empty()) throw std::runtime_error("run_sweep: empty lambda axis");
        for (double v : base.lambda_values) {
            ExperimentSpec s = root;
            s.lambda = v;
            points.push_back({fmt12(v), std::move(s)});
        }
    } else if (axis == SweepAxis::kPrototypes) {
        if (base.prototype_values.empty())
            throw std::runtime_error("run_sweep: empty prototype axis");
        for (std::size_t v : base.prototype_values) {
            ExperimentSpec s = root;
            s.prototypes = v;
            points.push_back({std::to_string(v), std::move(s)});
        }
    } else {
        // the loss-ablation grid: unc alone, then unc with each companion,
        // then all three
        const struct {
            const char* label;
            bool dis, entrop;
        } grid[4] = {{"unc", false, false},
                     {"unc_entrop", false, true},
                     {"unc_dis", true, false},
                     {"unc_entrop_dis", true, true}};
        for (const auto& g : grid) {
            ExperimentSpec s = root;
            s.loss_unc_on = true;
            s.loss_dis_on = g.dis;
            s.loss_entrop_on = g.entrop;
            points.push_back({g.label, std::move(s)});
        }
    }

    const char* axis_name = axis == SweepAxis::kLambda ? "lambda"
                            : axis == SweepAxis::kPrototypes ? "prototypes"
                                                             : "loss_toggles";
    std::vector<SweepRow> rows;
    for (auto& point : points) {
        point.spec.name = root.name + "_" + axis_name + "_" + point.label;
        point.spec.out_dir =
            (fs::path(root.out_dir) / (std::string(axis_name) + "_" + point.label)).string();
        try {
            const auto reports = run_experiment(point.spec);
            for (const auto& r : reports)
                rows.push_back({axis_name, point.label, false, "", r});
        } catch (const std::exception& e) {
            SweepRow row;
            row.axis = axis_name;
            row.value = point.label;
            row.failed = true;
            row.error = e.what();
            row.report.name = point.spec.name;
            row.report.seed = "failed";
            rows.push_back(row);
        }
    }

    std::ofstream out((fs::path(root.out_dir) / "sweep.csv").string());
    if (!out) throw std::runtime_error("run_sweep: cannot write sweep.csv");
    out << "axis,value,status," << kMetricCsvHeader << '\n';
    for (const auto& row : rows)
        out << row.axis << ',' << row.value << ',' << (row.failed ? "failed" : "ok") << ','
            << metric_csv_row(row.report) << '\n';
    return rows;
}

}  // namespace ldu
