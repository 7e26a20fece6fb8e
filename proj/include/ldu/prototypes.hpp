#pragma once
// Trainable prototype bank and the distinction-maximization (DM) layer over
// it: per input row, the similarity (cosine form) or negative Euclidean
// distance (L2 form) to each of the m prototypes, plus the exponential
// activation exp(-scores) used as the model embedding.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/rng.hpp"
#include "ldu/tensor.hpp"

namespace ldu {

// Guard for cosine similarity at near-zero vectors; inputs with norm below
// this are treated as having this norm.
inline constexpr double kNormEpsilon = 1e-8;

struct PrototypeBank {
    Tensor prototypes;  // m x n, trainable
    std::size_t m{0};
    std::size_t n{0};
    // When set, rows are rescaled to unit L2 norm after every optimizer step.
    bool unit_norm{true};
};

// m rows drawn i.i.d. from a seeded standard normal and scaled to unit norm.
inline PrototypeBank init_prototypes(std::size_t m, std::size_t n, std::uint64_t seed,
                                     bool unit_norm = true) {
    if (m < 1 || n < 1)
        throw std::runtime_error("init_prototypes: m and n must be at least 1, got m=" +
                                 std::to_string(m) + " n=" + std::to_string(n));
    std::vector<double> rows(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        std::uint64_t sub = 0;
        while (true) {
            Rng rng(mix_seed(seed, i + (sub << 20)));
            double norm_sq = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                rows[i * n + j] = rng.normal();
                norm_sq += rows[i * n + j] * rows[i * n + j];
            }
            if (norm_sq > 0.0) {
                const double inv = 1.0 / std::sqrt(norm_sq);
                for (std::size_t j = 0; j < n; ++j) rows[i * n + j] *= inv;
                break;
            }
            ++sub;  // zero draw: retry with an incremented sub-seed
        }
    }
    PrototypeBank bank;
    bank.prototypes = Tensor::leaf({m, n}, std::move(rows), /*requires_grad=*/true);
    bank.m = m;
    bank.n = n;
    bank.unit_norm = unit_norm;
    return bank;
}

// scores[j][i] = -||z_j - p_i||_2 (all entries <= 0)
inline Tensor dm_forward_l2(const Tensor& z, const PrototypeBank& bank) {
    if (z.rank() != 2 || z.cols() != bank.n)
        throw std::runtime_error("dm_forward_l2: latent width " +
                                 detail::shape_str(z.shape()) + " does not match bank n=" +
                                 std::to_string(bank.n));
    return neg_pairwise_l2(z, bank.prototypes);
}

// scores[j][i] = <z_j, p_i> / (max(||z_j||, eps) * max(||p_i||, eps)),
// entries in [-1, 1]
inline Tensor dm_forward_cos(const Tensor& z, const PrototypeBank& bank) {
    if (z.rank() != 2 || z.cols() != bank.n)
        throw std::runtime_error("dm_forward_cos: latent width " +
                                 detail::shape_str(z.shape()) + " does not match bank n=" +
                                 std::to_string(bank.n));
    Tensor zn = div(z, clamp_min(l2_norm_rows(z), kNormEpsilon));
    Tensor pn = div(bank.prototypes, clamp_min(l2_norm_rows(bank.prototypes), kNormEpsilon));
    return matmul(zn, transpose(pn));
}

// exp(-DM_cos); every entry in [1/e, e], differentiable end to end.
inline Tensor ldu_embed(const Tensor& z, const PrototypeBank& bank) {
    return exp(neg(dm_forward_cos(z, bank)));
}

// Evaluation-only embedding of a single latent row; no graph is recorded.
inline std::vector<double> ldu_embed_row(std::span<const double> z, const PrototypeBank& bank) {
    if (z.size() != bank.n)
        throw std::runtime_error("ldu_embed_row: latent width " + std::to_string(z.size()) +
                                 " does not match bank n=" + std::to_string(bank.n));
    double zn = 0.0;
    for (double v : z) zn += v * v;
    zn = std::max(std::sqrt(zn), kNormEpsilon);
    const auto pv = bank.prototypes.values();
    std::vector<double> out(bank.m);
    for (std::size_t i = 0; i < bank.m; ++i) {
        double dot = 0.0, pn = 0.0;
        for (std::size_t j = 0; j < bank.n; ++j) {
            dot += z[j] * pv[i * bank.n + j];
            pn += pv[i * bank.n + j] * pv[i * bank.n + j];
        }
        pn = std::max(std::sqrt(pn), kNormEpsilon);
        out[i] = std::exp(-dot / (zn * pn));
    }
    return out;
}

// Rescale every row to unit L2 norm in place (directions unchanged).
inline void renormalize_prototypes(PrototypeBank& bank) {
    auto& values = bank.prototypes.mutable_values();
    for (std::size_t i = 0; i < bank.m; ++i) {
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < bank.n; ++j)
            norm_sq += values[i * bank.n + j] * values[i * bank.n + j];
        if (norm_sq <= 0.0)
            throw std::runtime_error("renormalize_prototypes: row " + std::to_string(i) +
                                     " is the zero vector");
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t j = 0; j < bank.n; ++j) values[i * bank.n + j] *= inv;
    }
}

}  // namespace ldu
