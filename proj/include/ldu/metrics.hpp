#pragma once
// Uncertainty-quality and accuracy metrics: ECE (equal-width confidence
// bins, right-inclusive edges), AUROC (threshold sweep, equal to the
// Mann-Whitney statistic with half-credit ties), AUPR (descending-score
// sweep, precision held right-constant between recall levels), FPR at 95%
// TPR, and the sparsification-based AUSE for regression. OOD is the
// positive class throughout; higher score means more uncertain.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/format.hpp"

namespace ldu {

struct MetricReport {
    std::string name;
    std::string seed;  // seed number, or "mean" for the aggregate row
    std::size_t n_id{0};
    std::size_t n_ood{0};
    double accuracy{std::numeric_limits<double>::quiet_NaN()};
    double ece{std::numeric_limits<double>::quiet_NaN()};
    double auroc{std::numeric_limits<double>::quiet_NaN()};
    double aupr{std::numeric_limits<double>::quiet_NaN()};
    double fpr_at_95_tpr{std::numeric_limits<double>::quiet_NaN()};
    double ause_rmse{std::numeric_limits<double>::quiet_NaN()};
    double ause_absrel{std::numeric_limits<double>::quiet_NaN()};
};

inline constexpr const char* kMetricCsvHeader =
    "name,seed,n_id,n_ood,accuracy,ece,auroc,aupr,fpr_at_95_tpr,ause_rmse,ause_absrel";

inline std::string metric_csv_row(const MetricReport& r) {
    auto cell = [](double v) { return std::isfinite(v) ? fmt17(v) : std::string(); };
    std::string row = r.name + ',' + r.seed + ',' + std::to_string(r.n_id) + ',' +
                      std::to_string(r.n_ood) + ',' + cell(r.accuracy) + ',' + cell(r.ece) +
                      ',' + cell(r.auroc) + ',' + cell(r.aupr) + ',' + cell(r.fpr_at_95_tpr) +
                      ',' + cell(r.ause_rmse) + ',' + cell(r.ause_absrel);
    return row;
}

inline double accuracy(const std::vector<std::size_t>& pred,
                       const std::vector<std::size_t>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::runtime_error("accuracy: label vectors must be nonempty and equal length");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Confidence ECE over `bins` equal-width bins with right-inclusive edges
// ((k/bins, (k+1)/bins]; confidence 0 falls into the first bin). Empty bins
// contribute nothing.
inline double ece(const std::vector<double>& confidences, const std::vector<bool>& correct,
                  std::size_t bins) {
    if (bins < 1) throw std::runtime_error("ece: need at least one bin");
    if (confidences.size() != correct.size() || confidences.empty())
        throw std::runtime_error("ece: confidence/correctness vectors must be nonempty and "
                                 "equal length");
    std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const double c = confidences[i];
        if (!(c >= 0.0 && c <= 1.0))
            throw std::runtime_error("ece: confidence " + fmt17(c) + " outside [0,1]");
        std::size_t b = c <= 0.0 ? 0
                                 : static_cast<std::size_t>(
                                       std::ceil(c * static_cast<double>(bins))) -
                                       1;
        b = std::min(b, bins - 1);
        conf_sum[b] += c;
        acc_sum[b] += correct[i] ? 1.0 : 0.0;
        ++count[b];
    }
    double total = 0.0;
    const double n = static_cast<double>(confidences.size());
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double m = static_cast<double>(count[b]);
        total += (m / n) * std::abs(acc_sum[b] / m - conf_sum[b] / m);
    }
    return total;
}

namespace detail {

struct SweepPoint {
    std::size_t tp{0};
    std::size_t fp{0};
};

// cumulative (tp, fp) counts at each distinct threshold, descending; a
// sample is classified positive when its score >= threshold
inline std::vector<SweepPoint> threshold_sweep(std::vector<double> pos, std::vector<double> neg) {
    std::sort(pos.begin(), pos.end(), std::greater<>());
    std::sort(neg.begin(), neg.end(), std::greater<>());
    std::vector<SweepPoint> points;
    std::size_t i = 0, j = 0;
    while (i < pos.size() || j < neg.size()) {
        const double v = [&] {
            if (i == pos.size()) return neg[j];
            if (j == neg.size()) return pos[i];
            return std::max(pos[i], neg[j]);
        }();
        while (i < pos.size() && pos[i] == v) ++i;
        while (j < neg.size() && neg[j] == v) ++j;
        points.push_back({i, j});
    }
    return points;
}

inline void require_nonempty(const std::vector<double>& pos, const std::vector<double>& neg,
                             const char* op) {
    if (pos.empty() || neg.empty())
        throw std::runtime_error(std::string(op) + ": both score sets must be nonempty");
    for (double v : pos)
        if (!std::isfinite(v)) throw std::runtime_error(std::string(op) + ": non-finite score");
    for (double v : neg)
        if (!std::isfinite(v)) throw std::runtime_error(std::string(op) + ": non-finite score");
}

}  // namespace detail

// Area under the ROC curve for separating positives (OOD) from negatives
// (ID) by score; trapezoids over distinct thresholds, which matches pair
// counting with half credit for ties.
inline double auroc(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg) {
    detail::require_nonempty(scores_pos, scores_neg, "auroc");
    const double np = static_cast<double>(scores_pos.size());
    const double nn = static_cast<double>(scores_neg.size());
    double area = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
    for (const auto& pt : detail::threshold_sweep(scores_pos, scores_neg)) {
        const double tpr = static_cast<double>(pt.tp) / np;
        const double fpr = static_cast<double>(pt.fp) / nn;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    return area;
}

// Area under the precision-recall curve (positives = OOD), descending-score
// sweep with precision held right-constant between recall levels.
inline double aupr(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg) {
    detail::require_nonempty(scores_pos, scores_neg, "aupr");
    const double np = static_cast<double>(scores_pos.size());
    double area = 0.0, prev_recall = 0.0;
    for (const auto& pt : detail::threshold_sweep(scores_pos, scores_neg)) {
        if (pt.tp + pt.fp == 0) continue;
        const double recall = static_cast<double>(pt.tp) / np;
        const double precision =
            static_cast<double>(pt.tp) / static_cast<double>(pt.tp + pt.fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

// Smallest false-positive rate among thresholds reaching TPR >= 0.95.
inline double fpr_at_95_tpr(const std::vector<double>& scores_pos,
                            const std::vector<double>& scores_neg) {
    detail::require_nonempty(scores_pos, scores_neg, "fpr_at_95_tpr");
    const double np = static_cast<double>(scores_pos.size());
    const double nn = static_cast<double>(scores_neg.size());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : detail::threshold_sweep(scores_pos, scores_neg)) {
        const double tpr = static_cast<double>(pt.tp) / np;
        if (tpr >= 0.95) best = std::min(best, static_cast<double>(pt.fp) / nn);
    }
    return best;
}

enum class AuseKind { kRmse, kAbsRel };

// Area under the sparsification error. The top fraction t of samples ranked
// by uncertainty is removed and the error metric recomputed on the rest;
// the oracle curve ranks by the true per-sample error contribution. Both
// curves are normalized by the full-set error, and AUSE is the mean gap
// over t in {0, 1/steps, ..., (steps-1)/steps}. Ties break by sample index
// in both rankings. absrel requires nonzero ground-truth targets.
inline double ause(const std::vector<double>& errors, const std::vector<double>& uncertainties,
                   AuseKind kind, std::size_t steps,
                   const std::vector<double>& targets = {}) {
    const std::size_t n = errors.size();
    if (n == 0 || uncertainties.size() != n)
        throw std::runtime_error("ause: error/uncertainty vectors must be nonempty and equal "
                                 "length");
    if (steps < 2) throw std::runtime_error("ause: need at least 2 sparsification steps");

    std::vector<double> contribution(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (kind == AuseKind::kRmse) {
            contribution[i] = std::abs(errors[i]);
        } else {
            if (targets.size() != n)
                throw std::runtime_error("ause: absrel requires ground-truth targets");
            if (std::abs(targets[i]) <= 0.0)
                throw std::runtime_error("ause: absrel requires nonzero targets");
            contribution[i] = std::abs(errors[i]) / std::abs(targets[i]);
        }
    }

    auto ranking = [n](const std::vector<double>& key) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&key](std::size_t a, std::size_t b) { return key[a] > key[b]; });
        return idx;
    };
    auto subset_error = [&](const std::vector<std::size_t>& order, std::size_t removed) {
        double acc = 0.0;
        for (std::size_t k = removed; k < n; ++k) {
            const std::size_t i = order[k];
            acc += kind == AuseKind::kRmse ? errors[i] * errors[i] : contribution[i];
        }
        const double m = static_cast<double>(n - removed);
        return kind == AuseKind::kRmse ? std::sqrt(acc / m) : acc / m;
    };

    const std::vector<std::size_t> by_unc = ranking(uncertainties);
    const std::vector<std::size_t> by_err = ranking(contribution);
    const double base = subset_error(by_unc, 0);
    if (base <= 0.0) return 0.0;  // error-free predictions: both curves are zero

    double gap = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(steps);
        const std::size_t removed =
            static_cast<std::size_t>(std::floor(t * static_cast<double>(n) + 1e-9));
        gap += subset_error(by_unc, removed) / base - subset_error(by_err, removed) / base;
    }
    return gap / static_cast<double>(steps);
}

}  // namespace ldu
