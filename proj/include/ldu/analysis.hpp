#pragma once
// Feature-space diagnostics: 2-D PCA projection (cyclic Jacobi
// eigendecomposition of the covariance), silhouette-based class separation,
// confidence score grids over a 2-D box, and empirical Lipschitz-ratio
// estimation of a vector map.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/model.hpp"
#include "ldu/rng.hpp"
#include "ldu/tensor.hpp"

namespace ldu {

struct PcaResult {
    std::size_t rows{0};
    std::vector<double> projection;  // rows x 2
    std::vector<double> components;  // 2 x n, unit length, largest entry positive
    double explained_variance[2]{0.0, 0.0};
};

struct CollapseReport {
    PcaResult pca;
    double separation_score{0.0};  // mean silhouette in the projection
    std::string model_descriptor;
};

namespace detail {

// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues in
// `diag` and eigenvectors in the columns of `vecs`.
inline void jacobi_eigen(std::vector<double>& mat, std::size_t n, std::vector<double>& diag,
                         std::vector<double>& vecs) {
    vecs.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vecs[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += mat[p * n + q] * mat[p * n + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = mat[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (mat[q * n + q] - mat[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = mat[k * n + p], akq = mat[k * n + q];
                    mat[k * n + p] = c * akp - s * akq;
                    mat[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = mat[p * n + k], aqk = mat[q * n + k];
                    mat[p * n + k] = c * apk - s * aqk;
                    mat[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vecs[k * n + p], vkq = vecs[k * n + q];
                    vecs[k * n + p] = c * vkp - s * vkq;
                    vecs[k * n + q] = s * vkp + c * vkq;
                }
            }
    }
    diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = mat[i * n + i];
}

}  // namespace detail

// Centers the rows, eigendecomposes the sample covariance, and projects on
// the top-2 components. Components have their largest-magnitude entry
// forced positive so projections are reproducible up to nothing.
inline PcaResult pca_2d(const std::vector<double>& features, std::size_t rows,
                        std::size_t cols) {
    if (rows < 3 || cols < 2)
        throw std::runtime_error("pca_2d: need at least 3 rows and 2 columns, got " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
    if (features.size() != rows * cols)
        throw std::runtime_error("pca_2d: feature buffer does not match rows*cols");

    std::vector<double> mean(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) mean[j] += features[i * cols + j];
    for (double& m : mean) m /= static_cast<double>(rows);

    std::vector<double> centered(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            centered[i * cols + j] = features[i * cols + j] - mean[j];

    std::vector<double> cov(cols * cols, 0.0);
    const double inv = 1.0 / static_cast<double>(rows - 1);
    for (std::size_t a = 0; a < cols; ++a)
        for (std::size_t b = a; b < cols; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < rows; ++i)
                s += centered[i * cols + a] * centered[i * cols + b];
            cov[a * cols + b] = cov[b * cols + a] = s * inv;
        }

    double max_cov = 0.0;
    for (double v : cov) max_cov = std::max(max_cov, std::abs(v));
    if (max_cov < 1e-30)
        throw std::runtime_error("pca_2d: degenerate data (all rows identical)");

    std::vector<double> diag, vecs;
    detail::jacobi_eigen(cov, cols, diag, vecs);

    std::size_t top[2] = {0, 0};
    for (std::size_t i = 1; i < cols; ++i)
        if (diag[i] > diag[top[0]]) top[0] = i;
    top[1] = top[0] == 0 ? 1 : 0;
    for (std::size_t i = 0; i < cols; ++i)
        if (i != top[0] && diag[i] > diag[top[1]]) top[1] = i;

    PcaResult result;
    result.rows = rows;
    result.components.assign(2 * cols, 0.0);
    for (int c = 0; c < 2; ++c) {
        result.explained_variance[c] = std::max(0.0, diag[top[c]]);
        std::size_t arg = 0;
        for (std::size_t j = 1; j < cols; ++j)
            if (std::abs(vecs[j * cols + top[c]]) > std::abs(vecs[arg * cols + top[c]])) arg = j;
        const double sign = vecs[arg * cols + top[c]] >= 0.0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < cols; ++j)
            result.components[c * cols + j] = sign * vecs[j * cols + top[c]];
    }

    result.projection.assign(rows * 2, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (int c = 0; c < 2; ++c) {
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j)
                dot += centered[i * cols + j] * result.components[c * cols + j];
            result.projection[i * 2 + c] = dot;
        }
    return result;
}

// Mean silhouette coefficient of the labeled 2-D projection with Euclidean
// distance. Every class needs at least 2 members.
inline double collapse_score(const std::vector<double>& projection,
                             const std::vector<std::size_t>& labels) {
    const std::size_t n = labels.size();
    if (projection.size() != n * 2)
        throw std::runtime_error("collapse_score: projection must be n x 2");
    std::size_t classes = 0;
    for (std::size_t lab : labels) classes = std::max(classes, lab + 1);
    if (classes < 2) throw std::runtime_error("collapse_score: need at least 2 classes");
    std::vector<std::size_t> count(classes, 0);
    for (std::size_t lab : labels) ++count[lab];
    for (std::size_t c = 0; c < classes; ++c)
        if (count[c] < 2)
            throw std::runtime_error("collapse_score: class " + std::to_string(c) +
                                     " has fewer than 2 samples");

    auto dist = [&](std::size_t a, std::size_t b) {
        const double dx = projection[a * 2] - projection[b * 2];
        const double dy = projection[a * 2 + 1] - projection[b * 2 + 1];
        return std::sqrt(dx * dx + dy * dy);
    };

    double total = 0.0;
    std::vector<double> sum_to_class(classes);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(sum_to_class.begin(), sum_to_class.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sum_to_class[labels[j]] += dist(i, j);
        const double a = sum_to_class[labels[i]] / static_cast<double>(count[labels[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes; ++c)
            if (c != labels[i]) b = std::min(b, sum_to_class[c] / static_cast<double>(count[c]));
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// confidence grids

enum class ScoreKind { kAleatoric, kEpistemicUncHead, kEpistemicMaxEmbed };

struct GridBounds {
    double x_lo{0.0}, x_hi{1.0}, y_lo{0.0}, y_hi{1.0};
};

struct ConfidenceGrid {
    std::size_t resolution{0};
    GridBounds bounds{};
    std::vector<double> xs, ys;     // lattice coordinates per axis
    std::vector<double> values;     // row-major, index = yi * resolution + xi
};

inline ConfidenceGrid confidence_grid(const LduModel& model, ScoreKind kind, GridBounds bounds,
                                      std::size_t resolution) {
    if (model.spec.widths.front() != 2)
        throw std::runtime_error("confidence_grid: model input dimension must be 2");
    if (resolution < 2) throw std::runtime_error("confidence_grid: resolution must be >= 2");

    ConfidenceGrid grid;
    grid.resolution = resolution;
    grid.bounds = bounds;
    auto axis = [resolution](double lo, double hi) {
        std::vector<double> v(resolution);
        for (std::size_t k = 0; k < resolution; ++k)
            v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(resolution - 1);
        return v;
    };
    grid.xs = axis(bounds.x_lo, bounds.x_hi);
    grid.ys = axis(bounds.y_lo, bounds.y_hi);

    std::vector<double> points;
    points.reserve(resolution * resolution * 2);
    for (double y : grid.ys)
        for (double x : grid.xs) {
            points.push_back(x);
            points.push_back(y);
        }
    ModelOutput out =
        forward_full(model, Tensor::constant({resolution * resolution, 2}, std::move(points)));
    switch (kind) {
        case ScoreKind::kAleatoric: grid.values = aleatoric_score(out, model.spec.task); break;
        case ScoreKind::kEpistemicUncHead:
            grid.values = epistemic_score(out, EpistemicMode::kUncHead);
            break;
        case ScoreKind::kEpistemicMaxEmbed:
            grid.values = epistemic_score(out, EpistemicMode::kMaxEmbed);
            break;
    }
    return grid;
}

// ---------------------------------------------------------------------------
// empirical Lipschitz ratio

struct SampleBox {
    std::vector<double> lo, hi;  // per-dimension bounds
};

struct LipschitzEstimate {
    double max_ratio{0.0};
    std::size_t pair_count{0};
    SampleBox box{};
    double min_norm{0.0};
};

using VectorMap = std::function<std::vector<double>(std::span<const double>)>;

// Max over sampled point pairs of output distance / input distance. Points
// are uniform in the box, rejecting those with norm below min_norm;
// zero-distance pairs are redrawn. Deterministic per seed, and runs with the
// same seed sample a common prefix, so estimates are nested across pair
// counts.
inline LipschitzEstimate lipschitz_ratio(const VectorMap& map, const SampleBox& box,
                                         double min_norm, std::size_t pairs,
                                         std::uint64_t seed) {
    if (box.lo.size() != box.hi.size() || box.lo.empty())
        throw std::runtime_error("lipschitz_ratio: invalid sampling box");
    if (min_norm <= 0.0) throw std::runtime_error("lipschitz_ratio: min_norm must be positive");
    const std::size_t d = box.lo.size();
    Rng rng(mix_seed(seed, 6));

    auto draw = [&] {
        std::vector<double> z(d);
        while (true) {
            double norm_sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                z[j] = rng.uniform(box.lo[j], box.hi[j]);
                norm_sq += z[j] * z[j];
            }
            if (norm_sq >= min_norm * min_norm) return z;
        }
    };

    LipschitzEstimate est;
    est.pair_count = pairs;
    est.box = box;
    est.min_norm = min_norm;
    for (std::size_t k = 0; k < pairs; ++k) {
        std::vector<double> z1 = draw(), z2 = draw();
        double in_sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) in_sq += (z1[j] - z2[j]) * (z1[j] - z2[j]);
        if (in_sq <= 0.0) continue;  // coincident draw, skip
        const std::vector<double> f1 = map(z1), f2 = map(z2);
        if (f1.size() != f2.size())
            throw std::runtime_error("lipschitz_ratio: map output size varies");
        double out_sq = 0.0;
        for (std::size_t j = 0; j < f1.size(); ++j) out_sq += (f1[j] - f2[j]) * (f1[j] - f2[j]);
        est.max_ratio = std::max(est.max_ratio, std::sqrt(out_sq / in_sq));
    }
    return est;
}

}  // namespace ldu
