#pragma once
// Full network: feature extractor (relu MLP), prototype bank with DM layer
// and exponential activation, task head on the embedding, and the
// single-layer uncertainty head. A plain variant (no prototypes, head
// directly on the latent features) serves as the baseline and as the deep
// ensemble member.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/prototypes.hpp"
#include "ldu/rng.hpp"
#include "ldu/tensor.hpp"

namespace ldu {

enum class Task { kClassification, kRegression };
enum class DmVariant { kCosine, kL2 };
enum class ModelKind { kLdu, kPlain };
enum class EpistemicMode { kUncHead, kMaxEmbed };

struct AffineLayer {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out
};

struct ModelSpec {
    std::vector<std::size_t> widths;  // feature extractor, input width first
    std::size_t prototypes{16};
    std::size_t outputs{2};  // class count, or 1 for scalar regression
    Task task{Task::kClassification};
    ModelKind kind{ModelKind::kLdu};
    DmVariant dm_variant{DmVariant::kCosine};
    bool unit_norm{true};
    std::uint64_t seed{0};
};

struct LduModel {
    ModelSpec spec;
    std::vector<AffineLayer> feature;  // h: input -> latent, relu after each layer
    PrototypeBank bank;                // LDU kind only
    AffineLayer head;                  // embedding (or latent, plain kind) -> outputs
    AffineLayer unc_head;              // embedding -> 1, LDU kind only

    std::size_t latent_dim() const { return spec.widths.back(); }
    std::size_t embed_dim() const {
        return spec.kind == ModelKind::kLdu ? spec.prototypes : latent_dim();
    }

    std::vector<Tensor> parameters() const {
        std::vector<Tensor> out;
        for (const auto& layer : feature) {
            out.push_back(layer.weight);
            out.push_back(layer.bias);
        }
        if (spec.kind == ModelKind::kLdu) out.push_back(bank.prototypes);
        out.push_back(head.weight);
        out.push_back(head.bias);
        if (spec.kind == ModelKind::kLdu) {
            out.push_back(unc_head.weight);
            out.push_back(unc_head.bias);
        }
        return out;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : parameters()) n += p.size();
        return n;
    }
};

struct ModelOutput {
    Tensor logits;     // b x outputs
    Tensor embedding;  // b x m (plain kind: the latent features)
    Tensor unc_logit;  // b x 1 (LDU kind only)
    Tensor latent;     // b x n, pre-DM features
    Tensor dm_scores;  // b x m similarity scores (LDU kind only)
};

namespace detail {

inline AffineLayer init_affine(std::size_t in, std::size_t out, std::uint64_t seed) {
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out), b(out);
    for (double& v : w) v = rng.uniform(-bound, bound);
    for (double& v : b) v = rng.uniform(-bound, bound);
    return {Tensor::leaf({in, out}, std::move(w), true), Tensor::leaf({1, out}, std::move(b), true)};
}

inline Tensor affine(const Tensor& x, const AffineLayer& layer) {
    return add(matmul(x, layer.weight), layer.bias);
}

}  // namespace detail

inline LduModel build_model(const ModelSpec& spec) {
    if (spec.widths.size() < 2)
        throw std::runtime_error("build_model: need at least input and one hidden width");
    for (std::size_t w : spec.widths)
        if (w == 0) throw std::runtime_error("build_model: zero layer width");
    if (spec.outputs == 0) throw std::runtime_error("build_model: zero output width");

    LduModel model;
    model.spec = spec;
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i)
        model.feature.push_back(
            detail::init_affine(spec.widths[i], spec.widths[i + 1], mix_seed(spec.seed, i)));

    if (spec.kind == ModelKind::kLdu) {
        model.bank = init_prototypes(spec.prototypes, spec.widths.back(),
                                     mix_seed(spec.seed, 0x1000), spec.unit_norm);
        model.head =
            detail::init_affine(spec.prototypes, spec.outputs, mix_seed(spec.seed, 0x2000));
        model.unc_head = detail::init_affine(spec.prototypes, 1, mix_seed(spec.seed, 0x3000));
    } else {
        model.head =
            detail::init_affine(spec.widths.back(), spec.outputs, mix_seed(spec.seed, 0x2000));
    }
    return model;
}

inline ModelOutput forward_full(const LduModel& model, const Tensor& x) {
    if (x.rank() != 2 || x.cols() != model.spec.widths.front())
        throw std::runtime_error("forward_full: input " + detail::shape_str(x.shape()) +
                                 " does not match feature width " +
                                 std::to_string(model.spec.widths.front()));
    Tensor h = x;
    for (const auto& layer : model.feature) h = relu(detail::affine(h, layer));

    ModelOutput out;
    out.latent = h;
    if (model.spec.kind == ModelKind::kPlain) {
        out.embedding = h;
        out.logits = detail::affine(h, model.head);
        return out;
    }
    out.dm_scores = model.spec.dm_variant == DmVariant::kCosine
                        ? dm_forward_cos(h, model.bank)
                        : dm_forward_l2(h, model.bank);
    out.embedding = exp(neg(out.dm_scores));
    out.logits = detail::affine(out.embedding, model.head);
    out.unc_logit = detail::affine(out.embedding, model.unc_head);
    return out;
}

namespace detail {

inline std::vector<double> softmax_row_values(std::span<const double> row) {
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    std::vector<double> out(row.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        out[i] = std::exp(row[i] - mx);
        denom += out[i];
    }
    for (double& v : out) v /= denom;
    return out;
}

inline double sigmoid_value(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace detail

// Classification: 1 - max class probability (higher = more uncertain).
// Regression: sigmoid of the uncertainty head output.
inline std::vector<double> aleatoric_score(const ModelOutput& output, Task task) {
    if (task == Task::kClassification) {
        const std::size_t b = output.logits.rows(), c = output.logits.cols();
        std::vector<double> scores(b);
        for (std::size_t i = 0; i < b; ++i) {
            auto probs = detail::softmax_row_values(output.logits.values().subspan(i * c, c));
            double mx = probs[0];
            for (double p : probs) mx = std::max(mx, p);
            scores[i] = 1.0 - mx;
        }
        return scores;
    }
    if (!output.unc_logit.valid())
        throw std::runtime_error("aleatoric_score: regression output has no uncertainty head");
    std::vector<double> scores(output.unc_logit.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores[i] = detail::sigmoid_value(output.unc_logit.value(i));
    return scores;
}

// unc_head mode: sigmoid of the uncertainty head output, in (0,1).
// max_embed mode: e - max_i embedding_i, in [0, e - 1/e]; cosine-variant
// embeddings only.
inline std::vector<double> epistemic_score(const ModelOutput& output, EpistemicMode mode) {
    if (mode == EpistemicMode::kUncHead) {
        if (!output.unc_logit.valid())
            throw std::runtime_error("epistemic_score: output has no uncertainty head");
        std::vector<double> scores(output.unc_logit.size());
        for (std::size_t i = 0; i < scores.size(); ++i)
            scores[i] = detail::sigmoid_value(output.unc_logit.value(i));
        return scores;
    }
    const std::size_t b = output.embedding.rows(), m = output.embedding.cols();
    const double e = std::exp(1.0);
    std::vector<double> scores(b);
    for (std::size_t i = 0; i < b; ++i) {
        double mx = output.embedding.value(i, 0);
        for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, output.embedding.value(i, j));
        scores[i] = e - mx;
    }
    return scores;
}

// Mean of the per-model softmax outputs, row-major b x C.
inline std::vector<double> ensemble_predict(const std::vector<LduModel>& models, const Tensor& x) {
    if (models.empty()) throw std::runtime_error("ensemble_predict: empty model list");
    std::vector<double> mean_probs;
    std::size_t b = 0, c = 0;
    for (const auto& model : models) {
        ModelOutput out = forward_full(model, x);
        if (mean_probs.empty()) {
            b = out.logits.rows();
            c = out.logits.cols();
            mean_probs.assign(b * c, 0.0);
        } else if (out.logits.rows() != b || out.logits.cols() != c) {
            throw std::runtime_error("ensemble_predict: models disagree on output shape");
        }
        for (std::size_t i = 0; i < b; ++i) {
            auto probs = detail::softmax_row_values(out.logits.values().subspan(i * c, c));
            for (std::size_t j = 0; j < c; ++j) mean_probs[i * c + j] += probs[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(models.size());
    for (double& v : mean_probs) v *= inv;
    return mean_probs;
}

}  // namespace ldu
