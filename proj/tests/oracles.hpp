#pragma once
// Brute-force reference implementations used only by tests. These are
// written from the metric definitions directly (pair counting, exhaustive
// threshold enumeration, naive bucketing, repeated max extraction) and stay
// independent of the library implementations they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

namespace oracle {

// ECE by explicit per-bin interval membership, right-inclusive edges.
inline double ece(const std::vector<double>& conf, const std::vector<bool>& correct,
                  std::size_t bins) {
    double total = 0.0;
    const double n = static_cast<double>(conf.size());
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) / static_cast<double>(bins);
        const double hi = static_cast<double>(b + 1) / static_cast<double>(bins);
        double conf_sum = 0.0, acc_sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < conf.size(); ++i) {
            const bool member = b == 0 ? conf[i] <= hi : (conf[i] > lo && conf[i] <= hi);
            if (!member) continue;
            conf_sum += conf[i];
            acc_sum += correct[i] ? 1.0 : 0.0;
            ++count;
        }
        if (count == 0) continue;
        const double m = static_cast<double>(count);
        total += (m / n) * std::abs(acc_sum / m - conf_sum / m);
    }
    return total;
}

// AUROC as the Mann-Whitney statistic with half credit for ties.
inline double auroc(const std::vector<double>& pos, const std::vector<double>& neg) {
    double wins = 0.0;
    for (double p : pos)
        for (double q : neg) {
            if (p > q)
                wins += 1.0;
            else if (p == q)
                wins += 0.5;
        }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// AUPR by enumerating every distinct threshold and recomputing precision and
// recall from scratch (predict positive when score >= threshold).
inline double aupr(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::set<double, std::greater<>> thresholds(pos.begin(), pos.end());
    thresholds.insert(neg.begin(), neg.end());
    double area = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (double p : pos) tp += p >= t;
        for (double q : neg) fp += q >= t;
        if (tp + fp == 0) continue;
        const double recall = static_cast<double>(tp) / static_cast<double>(pos.size());
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

// Smallest FPR among thresholds achieving TPR >= 0.95, brute force.
inline double fpr_at_95_tpr(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::set<double> thresholds(pos.begin(), pos.end());
    thresholds.insert(neg.begin(), neg.end());
    double best = std::numeric_limits<double>::infinity();
    for (double t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (double p : pos) tp += p >= t;
        for (double q : neg) fp += q >= t;
        const double tpr = static_cast<double>(tp) / static_cast<double>(pos.size());
        if (tpr >= 0.95)
            best = std::min(best, static_cast<double>(fp) / static_cast<double>(neg.size()));
    }
    return best;
}

enum class AuseKind { kRmse, kAbsRel };

// AUSE with both curves built by repeatedly extracting the highest-key
// sample (stable in the original index order) and re-averaging the rest.
inline double ause(const std::vector<double>& errors, const std::vector<double>& uncertainties,
                   AuseKind kind, std::size_t steps, const std::vector<double>& targets = {}) {
    const std::size_t n = errors.size();
    auto extraction_order = [&](const std::vector<double>& key) {
        std::vector<std::size_t> remaining(n), order;
        for (std::size_t i = 0; i < n; ++i) remaining[i] = i;
        while (!remaining.empty()) {
            std::size_t arg = 0;
            for (std::size_t k = 1; k < remaining.size(); ++k)
                if (key[remaining[k]] > key[remaining[arg]]) arg = k;
            order.push_back(remaining[arg]);
            remaining.erase(remaining.begin() + static_cast<long>(arg));
        }
        return order;
    };
    auto metric_on_rest = [&](const std::vector<std::size_t>& order, std::size_t removed) {
        double acc = 0.0;
        for (std::size_t k = removed; k < n; ++k) {
            const std::size_t i = order[k];
            acc += kind == AuseKind::kRmse ? errors[i] * errors[i]
                                           : std::abs(errors[i]) / std::abs(targets[i]);
        }
        const double m = static_cast<double>(n - removed);
        return kind == AuseKind::kRmse ? std::sqrt(acc / m) : acc / m;
    };

    std::vector<double> contribution(n);
    for (std::size_t i = 0; i < n; ++i)
        contribution[i] = kind == AuseKind::kRmse
                              ? std::abs(errors[i])
                              : std::abs(errors[i]) / std::abs(targets[i]);

    const auto by_unc = extraction_order(uncertainties);
    const auto by_err = extraction_order(contribution);
    const double base = metric_on_rest(by_unc, 0);
    if (base <= 0.0) return 0.0;
    double gap = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(steps);
        const std::size_t removed =
            static_cast<std::size_t>(std::floor(t * static_cast<double>(n) + 1e-9));
        gap += metric_on_rest(by_unc, removed) / base - metric_on_rest(by_err, removed) / base;
    }
    return gap / static_cast<double>(steps);
}

}  // namespace oracle
