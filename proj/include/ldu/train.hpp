#pragma once
// Training loops: stage 1 minimizes the combined objective over shuffled
// mini-batches; the optional stage 2 freezes everything except the
// uncertainty head and fits it on synthesized outliers mixed with inliers.
// Deep ensembles are independently seeded stage-1 trainings of plain models.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/datasets.hpp"
#include "ldu/format.hpp"
#include "ldu/losses.hpp"
#include "ldu/model.hpp"
#include "ldu/optim.hpp"

namespace ldu {

struct LossToggles {
    bool dis{true};
    bool entrop{true};
    bool unc{true};
};

struct Stage2Config {
    double noise_scale{2.0};
    std::size_t steps{5000};
    double outlier_target{1.0};
    bool mix_inliers{true};  // false trains on outliers only
    // the head is a lone affine map, so it takes a much larger step size and
    // batch than stage 1
    double learning_rate{0.1};
    std::size_t batch_size{512};
};

struct TrainConfig {
    double lambda{0.1};
    std::size_t epochs{200};
    std::size_t batch_size{64};
    OptimizerConfig optimizer{};
    std::uint64_t seed{0};
    LossToggles toggles{};
    std::optional<Stage2Config> stage2{};
};

struct EpochRecord {
    std::size_t epoch{0};
    LossBreakdown losses{};
    double accuracy{std::numeric_limits<double>::quiet_NaN()};  // NaN for regression
};

struct TrainHistory {
    std::vector<EpochRecord> records;
};

inline void write_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_history_csv: cannot open " + path);
    out << "epoch,task,dis,entrop,unc,total,accuracy\n";
    for (const auto& rec : history.records) {
        out << rec.epoch << ',' << fmt17(rec.losses.task) << ',' << fmt17(rec.losses.dis) << ','
            << fmt17(rec.losses.entrop) << ',' << fmt17(rec.losses.unc) << ','
            << fmt17(rec.losses.total) << ',';
        if (std::isfinite(rec.accuracy)) out << fmt17(rec.accuracy);
        out << '\n';
    }
}

namespace detail {

inline std::vector<std::size_t> batch_labels(const Dataset& data,
                                             std::span<const std::size_t> idx) {
    std::vector<std::size_t> labels(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = data.label(idx[i]);
    return labels;
}

inline std::vector<double> batch_targets(const Dataset& data, std::span<const std::size_t> idx) {
    std::vector<double> t(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) t[i] = data.targets[idx[i]];
    return t;
}

// value-space per-sample losses, used where no gradient is needed
inline std::vector<double> per_sample_task_values(const LduModel& model, const ModelOutput& out,
                                                  const Dataset& data,
                                                  std::span<const std::size_t> idx) {
    std::vector<double> losses(idx.size());
    const std::size_t c = out.logits.cols();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (model.spec.task == Task::kClassification) {
            auto probs = softmax_row_values(out.logits.values().subspan(i * c, c));
            losses[i] = -std::log(std::max(probs[data.label(idx[i])], 1e-300));
        } else {
            const double diff = out.logits.value(i, 0) - data.targets[idx[i]];
            losses[i] = diff * diff;
        }
    }
    return losses;
}

inline double classification_accuracy(const LduModel& model, const Dataset& data) {
    ModelOutput out = forward_full(model, data.all_inputs());
    const std::size_t c = out.logits.cols();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (out.logits.value(i, j) > out.logits.value(i, best)) best = j;
        if (best == data.label(i)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace detail

// Stage-1 training over shuffled mini-batches, deterministic per seed. For
// plain models the auxiliary losses do not exist and only the task loss is
// minimized. Accuracy is evaluated per epoch on `validation` when given,
// otherwise on the training data (regression records NaN).
inline TrainHistory train_stage1(LduModel& model, const Dataset& data, const TrainConfig& cfg,
                                 const Dataset* validation = nullptr) {
    if (data.size() == 0) throw std::runtime_error("train_stage1: empty dataset");
    if (cfg.batch_size < 1) throw std::runtime_error("train_stage1: batch_size must be >= 1");
    if (cfg.lambda < 0.0) throw std::runtime_error("train_stage1: lambda must be nonnegative");
    if (data.dim != model.spec.widths.front())
        throw std::runtime_error("train_stage1: dataset dim " + std::to_string(data.dim) +
                                 " does not match model input width " +
                                 std::to_string(model.spec.widths.front()));

    const bool is_ldu = model.spec.kind == ModelKind::kLdu;
    LossToggles toggles = is_ldu ? cfg.toggles : LossToggles{false, false, false};

    std::vector<Tensor> params = model.parameters();
    Optimizer opt(cfg.optimizer);
    Rng shuffle_rng(mix_seed(cfg.seed, 0xA11));

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainHistory history;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        LossBreakdown epoch_sum;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            std::span<const std::size_t> idx(order.data() + start, count);
            Tensor x = data.gather_inputs(idx);
            ModelOutput out = forward_full(model, x);

            TaskLoss task = model.spec.task == Task::kClassification
                                ? cross_entropy(out.logits, detail::batch_labels(data, idx))
                                : regression_task_loss(out.logits, detail::batch_targets(data, idx));

            Tensor dis = toggles.dis ? loss_dis(model.bank) : Tensor::scalar(0.0);
            Tensor entrop = toggles.entrop ? loss_entrop(out.dm_scores) : Tensor::scalar(0.0);
            Tensor unc = Tensor::scalar(0.0);
            if (toggles.unc) {
                std::vector<double> raw(task.per_sample.values().begin(),
                                        task.per_sample.values().end());
                unc = loss_unc(sigmoid(out.unc_logit), normalize_batch_losses(raw));
            }
            auto [total, bd] = total_loss(task.mean, dis, entrop, unc, cfg.lambda);
            if (!std::isfinite(bd.total))
                throw std::runtime_error("train_stage1: non-finite total loss at epoch " +
                                         std::to_string(epoch) + " (diverged)");

            for (auto& p : params) p.zero_grad();
            backward(total);
            opt.step(params);
            if (is_ldu && model.bank.unit_norm) renormalize_prototypes(model.bank);

            epoch_sum.task += bd.task;
            epoch_sum.dis += bd.dis;
            epoch_sum.entrop += bd.entrop;
            epoch_sum.unc += bd.unc;
            epoch_sum.total += bd.total;
            ++batches;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        const double inv = 1.0 / static_cast<double>(batches);
        rec.losses = {epoch_sum.task * inv, epoch_sum.dis * inv, epoch_sum.entrop * inv,
                      epoch_sum.unc * inv, epoch_sum.total * inv, cfg.lambda};
        if (model.spec.task == Task::kClassification)
            rec.accuracy = detail::classification_accuracy(model, validation ? *validation : data);
        history.records.push_back(rec);
    }
    return history;
}

// Each outlier is an input sample displaced by isotropic Gaussian noise of
// the given per-dimension std; sample count matches the source.
inline Dataset synthesize_outliers(const Dataset& data, double noise_scale, std::uint64_t seed) {
    if (noise_scale <= 0.0)
        throw std::runtime_error("synthesize_outliers: noise_scale must be positive");
    Dataset out;
    out.dim = data.dim;
    out.seed = seed;
    out.descriptor = data.descriptor + "+noise";
    out.inputs = data.inputs;
    out.targets = data.targets;
    Rng rng(mix_seed(seed, 5));
    for (double& v : out.inputs) v += noise_scale * rng.normal();
    out.tags.assign(data.size(), DomainTag::kOutOfDistribution);
    return out;
}

// Stage 2: only the uncertainty head is updated. Batches mix inliers
// (targets = per-batch normalized task loss) and outliers (target =
// cfg.stage2->outlier_target) 1:1 unless mix_inliers is off. Because the
// encoder and prototypes are frozen here, every sample's embedding and task
// loss are fixed; they are computed once up front and stage-2 steps touch
// only the head.
inline TrainHistory train_stage2_unc_only(LduModel& model, const Dataset& inliers,
                                          const Dataset& outliers, const TrainConfig& cfg) {
    if (model.spec.kind != ModelKind::kLdu)
        throw std::runtime_error("train_stage2_unc_only: model has no uncertainty head");
    if (!cfg.stage2) throw std::runtime_error("train_stage2_unc_only: cfg.stage2 is not set");
    if (inliers.size() == 0 || outliers.size() == 0)
        throw std::runtime_error("train_stage2_unc_only: empty dataset");

    const Stage2Config& s2 = *cfg.stage2;
    const std::size_t m = model.bank.m;

    std::vector<double> in_embed, out_embed, in_task;
    {
        std::vector<std::size_t> all(inliers.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        ModelOutput in_out = forward_full(model, inliers.all_inputs());
        ModelOutput out_out = forward_full(model, outliers.all_inputs());
        in_embed.assign(in_out.embedding.values().begin(), in_out.embedding.values().end());
        out_embed.assign(out_out.embedding.values().begin(), out_out.embedding.values().end());
        in_task = detail::per_sample_task_values(model, in_out, inliers, all);
    }

    std::vector<Tensor> unc_params{model.unc_head.weight, model.unc_head.bias};
    OptimizerConfig opt_cfg = cfg.optimizer;
    opt_cfg.learning_rate = s2.learning_rate;
    Optimizer opt(opt_cfg);
    Rng rng(mix_seed(cfg.seed, 0xB22));

    // long stage-2 runs sample their loss history at ~100 evenly spaced steps
    const std::size_t record_every = std::max<std::size_t>(1, s2.steps / 100);

    TrainHistory history;
    for (std::size_t step = 0; step < s2.steps; ++step) {
        const std::size_t half = std::max<std::size_t>(1, s2.batch_size / 2);
        const std::size_t n_in = s2.mix_inliers ? half : 0;
        const std::size_t n_out = s2.mix_inliers ? half : s2.batch_size;

        std::vector<double> rows;
        rows.reserve((n_in + n_out) * m);
        std::vector<double> in_losses(n_in);
        for (std::size_t i = 0; i < n_in; ++i) {
            const std::size_t idx = rng.uniform_index(inliers.size());
            rows.insert(rows.end(), in_embed.begin() + idx * m, in_embed.begin() + (idx + 1) * m);
            in_losses[i] = in_task[idx];
        }
        for (std::size_t i = 0; i < n_out; ++i) {
            const std::size_t idx = rng.uniform_index(outliers.size());
            rows.insert(rows.end(), out_embed.begin() + idx * m,
                        out_embed.begin() + (idx + 1) * m);
        }
        Tensor embed = Tensor::constant({n_in + n_out, m}, std::move(rows));

        std::vector<double> targets;
        if (n_in > 0) targets = normalize_batch_losses(in_losses);
        targets.insert(targets.end(), n_out, s2.outlier_target);

        Tensor loss =
            loss_unc(sigmoid(detail::affine(embed, model.unc_head)), targets);
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value))
            throw std::runtime_error("train_stage2_unc_only: non-finite loss at step " +
                                     std::to_string(step));
        for (auto& p : unc_params) p.zero_grad();
        backward(loss);
        opt.step(unc_params);

        if ((step + 1) % record_every == 0 || step + 1 == s2.steps) {
            EpochRecord rec;
            rec.epoch = step;
            rec.losses = {0.0, 0.0, 0.0, loss_value, loss_value, cfg.lambda};
            history.records.push_back(rec);
        }
    }
    for (auto& p : unc_params) p.zero_grad();
    return history;
}

// Independently seeded stage-1 trainings of plain models on the task loss;
// three members by default.
inline std::vector<LduModel> train_deep_ensemble(const ModelSpec& member_spec,
                                                 const Dataset& data, const TrainConfig& cfg,
                                                 std::size_t members = 3) {
    if (members < 1) throw std::runtime_error("train_deep_ensemble: need at least one member");
    std::vector<LduModel> ensemble;
    for (std::size_t k = 0; k < members; ++k) {
        ModelSpec spec = member_spec;
        spec.kind = ModelKind::kPlain;
        spec.seed = mix_seed(member_spec.seed, 0x7000 + k);
        TrainConfig member_cfg = cfg;
        member_cfg.toggles = {false, false, false};
        member_cfg.seed = mix_seed(cfg.seed, 0x7100 + k);
        member_cfg.stage2.reset();
        LduModel model = build_model(spec);
        train_stage1(model, data, member_cfg);
        ensemble.push_back(std::move(model));
    }
    return ensemble;
}

}  // namespace ldu
