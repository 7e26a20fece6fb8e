#pragma once
// Training objectives: task losses (cross entropy, squared error), the
// prototype dissimilarity loss, the entropy-like spread loss over DM scores,
// the error-prediction BCE loss, and the combined weighted objective.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/prototypes.hpp"
#include "ldu/tensor.hpp"

namespace ldu {

inline constexpr double kBceClamp = 1e-7;

struct LossBreakdown {
    double task{0.0};
    double dis{0.0};
    double entrop{0.0};
    double unc{0.0};
    double total{0.0};
    double lambda{0.0};
};

struct TaskLoss {
    Tensor per_sample;  // b x 1
    Tensor mean;        // scalar
};

// per_sample_j = -log softmax(logits_j)[label_j]
inline TaskLoss cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels) {
    if (logits.rank() != 2)
        throw std::runtime_error("cross_entropy: logits must be rank 2, got " +
                                 detail::shape_str(logits.shape()));
    for (std::size_t lab : labels)
        if (lab >= logits.cols())
            throw std::runtime_error("cross_entropy: label " + std::to_string(lab) +
                                     " out of range for " + std::to_string(logits.cols()) +
                                     " classes");
    Tensor per_sample = neg(gather_rows(log_softmax_rows(logits), labels));
    return {per_sample, mean(per_sample)};
}

// per_sample = (pred - target)^2
inline TaskLoss regression_task_loss(const Tensor& pred, const std::vector<double>& target) {
    if (pred.size() != target.size())
        throw std::runtime_error("regression_task_loss: " + std::to_string(pred.size()) +
                                 " predictions vs " + std::to_string(target.size()) +
                                 " targets");
    Tensor t = Tensor::constant(pred.shape(), target);
    Tensor diff = sub(pred, t);
    Tensor per_sample = mul(diff, diff);
    return {per_sample, mean(per_sample)};
}

// -sum over unordered prototype pairs of ||p_i - p_j||; 0 for a single
// prototype.
inline Tensor loss_dis(const PrototypeBank& bank) {
    return neg(pairwise_dist_sum(bank.prototypes));
}

// Per row: softmax the m DM scores and take sum_i s_i log s_i (negative
// entropy, in [-log m, 0]); averaged over the batch. Computed via
// log_softmax so saturated rows stay finite.
inline Tensor loss_entrop(const Tensor& dm_scores) {
    if (dm_scores.rank() != 2)
        throw std::runtime_error("loss_entrop: scores must be rank 2, got " +
                                 detail::shape_str(dm_scores.shape()));
    Tensor s = softmax_rows(dm_scores);
    Tensor ls = log_softmax_rows(dm_scores);
    const double inv_batch = 1.0 / static_cast<double>(dm_scores.rows());
    return scalar_mul(sum(mul(s, ls)), inv_batch);
}

// Min-max rescaling of per-sample losses to [0, 1]; a degenerate batch
// (range below 1e-12, including singletons) maps everything to 0.
inline std::vector<double> normalize_batch_losses(const std::vector<double>& per_sample) {
    if (per_sample.empty())
        throw std::runtime_error("normalize_batch_losses: empty batch");
    double lo = per_sample[0], hi = per_sample[0];
    for (double v : per_sample) {
        if (!std::isfinite(v))
            throw std::runtime_error("normalize_batch_losses: non-finite loss value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out(per_sample.size(), 0.0);
    const double range = hi - lo;
    if (range < 1e-12) return out;
    for (std::size_t i = 0; i < per_sample.size(); ++i) out[i] = (per_sample[i] - lo) / range;
    return out;
}

// Binary cross entropy of predicted error probabilities against (soft)
// targets in [0,1]; probabilities are clamped away from {0,1} before the
// logs.
inline Tensor loss_unc(const Tensor& unc_prob, const std::vector<double>& targets) {
    if (unc_prob.size() != targets.size())
        throw std::runtime_error("loss_unc: " + std::to_string(unc_prob.size()) +
                                 " probabilities vs " + std::to_string(targets.size()) +
                                 " targets");
    for (double t : targets)
        if (!(t >= 0.0 && t <= 1.0))
            throw std::runtime_error("loss_unc: target outside [0,1]");
    Tensor p = clamp(unc_prob, kBceClamp, 1.0 - kBceClamp);
    Tensor t = Tensor::constant(unc_prob.shape(), targets);
    Tensor one = Tensor::full(unc_prob.shape(), 1.0);
    Tensor ll = add(mul(t, log(p)), mul(sub(one, t), log(sub(one, p))));
    return neg(mean(ll));
}

// total = task + lambda * (entrop + dis + unc). Components enter as scalar
// tensors so the graph stays differentiable; the returned breakdown freezes
// their values.
inline std::pair<Tensor, LossBreakdown> total_loss(const Tensor& task, const Tensor& dis,
                                                   const Tensor& entrop, const Tensor& unc,
                                                   double lambda) {
    if (lambda < 0.0) throw std::runtime_error("total_loss: lambda must be nonnegative");
    Tensor total = add(task, scalar_mul(add(add(entrop, dis), unc), lambda));
    LossBreakdown bd;
    bd.task = task.item();
    bd.dis = dis.item();
    bd.entrop = entrop.item();
    bd.unc = unc.item();
    bd.total = total.item();
    bd.lambda = lambda;
    return {total, bd};
}

}  // namespace ldu
