#pragma once
// Deterministic synthetic datasets (two moons, OOD ring, Gaussian blobs,
// 1-D sinusoid regression) plus CSV import/export. Every generator is a
// pure function of its arguments including the seed.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/format.hpp"
#include "ldu/rng.hpp"
#include "ldu/tensor.hpp"

namespace ldu {

enum class DomainTag { kInDistribution, kOutOfDistribution };

struct Dataset {
    std::size_t dim{0};
    std::vector<double> inputs;   // row-major size() x dim
    std::vector<double> targets;  // class index (stored as double) or real value
    std::vector<DomainTag> tags;
    std::uint64_t seed{0};
    std::string descriptor;

    std::size_t size() const { return targets.size(); }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(inputs).subspan(i * dim, dim);
    }
    std::size_t label(std::size_t i) const { return static_cast<std::size_t>(targets[i]); }

    // batch matrix for the given sample indices
    Tensor gather_inputs(std::span<const std::size_t> idx) const {
        std::vector<double> rows(idx.size() * dim);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < dim; ++c) rows[r * dim + c] = inputs[idx[r] * dim + c];
        return Tensor::constant({idx.size(), dim}, std::move(rows));
    }
    Tensor all_inputs() const {
        return Tensor::constant({size(), dim}, inputs);
    }
};

// Two interleaving unit half-circles: class 0 on (cos t, sin t) for t in
// [0, pi]; class 1 is the flipped arc with its apex displaced to (1, -0.5),
// i.e. (1 - cos t, 0.5 - sin t). Gaussian noise of the given std is added
// per coordinate.
inline Dataset two_moons(std::size_t n, double noise, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0)
        throw std::runtime_error("two_moons: n must be even and at least 2, got " +
                                 std::to_string(n));
    if (noise < 0.0) throw std::runtime_error("two_moons: noise must be nonnegative");
    const std::size_t half = n / 2;
    Dataset ds;
    ds.dim = 2;
    ds.seed = seed;
    ds.descriptor = "two_moons";
    ds.inputs.reserve(n * 2);
    Rng rng(mix_seed(seed, 0));
    for (std::size_t cls = 0; cls < 2; ++cls) {
        for (std::size_t k = 0; k < half; ++k) {
            const double t =
                half == 1 ? 0.0
                          : std::numbers::pi * static_cast<double>(k) / static_cast<double>(half - 1);
            double x = std::cos(t), y = std::sin(t);
            if (cls == 1) {
                x = 1.0 - x;
                y = 0.5 - y;
            }
            ds.inputs.push_back(x + noise * rng.normal());
            ds.inputs.push_back(y + noise * rng.normal());
            ds.targets.push_back(static_cast<double>(cls));
            ds.tags.push_back(DomainTag::kInDistribution);
        }
    }
    return ds;
}

// Points uniform in the annulus inner <= r <= outer around center; all
// tagged out-of-distribution.
inline Dataset ood_ring(std::size_t n, double cx, double cy, double inner, double outer,
                        std::uint64_t seed) {
    if (!(0.0 < inner && inner < outer))
        throw std::runtime_error("ood_ring: need 0 < inner < outer, got inner=" +
                                 fmt17(inner) + " outer=" + fmt17(outer));
    Dataset ds;
    ds.dim = 2;
    ds.seed = seed;
    ds.descriptor = "ood_ring";
    Rng rng(mix_seed(seed, 1));
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::sqrt(inner * inner + rng.uniform() * (outer * outer - inner * inner));
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        ds.inputs.push_back(cx + r * std::cos(phi));
        ds.inputs.push_back(cy + r * std::sin(phi));
        ds.targets.push_back(0.0);
        ds.tags.push_back(DomainTag::kOutOfDistribution);
    }
    return ds;
}

// k Gaussian clusters with means drawn on the sphere of radius 4*spread and
// per-coordinate std = spread. The realized means must be pairwise at least
// 2*spread apart; otherwise the whole draw is retried with an incremented
// sub-seed. offset_scale displaces the whole constellation by a seeded
// random direction of length offset_scale*spread, and mean_seed (default:
// seed) fixes the mean placement so displaced sets share the class geometry
// of an in-distribution draw.
inline Dataset gaussian_blobs(std::size_t k, std::size_t n_per_class, std::size_t d,
                              double spread, std::uint64_t seed, double offset_scale = 0.0,
                              std::uint64_t mean_seed = UINT64_MAX) {
    if (k < 2) throw std::runtime_error("gaussian_blobs: need at least 2 classes");
    if (d < 1 || n_per_class < 1)
        throw std::runtime_error("gaussian_blobs: dimensions and counts must be positive");
    if (spread <= 0.0) throw std::runtime_error("gaussian_blobs: spread must be positive");
    if (mean_seed == UINT64_MAX) mean_seed = seed;

    std::vector<double> means(k * d);
    bool ok = false;
    for (std::uint64_t attempt = 0; attempt < 1000 && !ok; ++attempt) {
        Rng rng(mix_seed(mean_seed, 2 + attempt));
        for (std::size_t i = 0; i < k; ++i) {
            double norm_sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                means[i * d + j] = rng.normal();
                norm_sq += means[i * d + j] * means[i * d + j];
            }
            const double scale = norm_sq > 0.0 ? 4.0 * spread / std::sqrt(norm_sq) : 0.0;
            for (std::size_t j = 0; j < d; ++j) means[i * d + j] *= scale;
        }
        ok = true;
        for (std::size_t a = 0; a < k && ok; ++a)
            for (std::size_t b = a + 1; b < k && ok; ++b) {
                double dist_sq = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = means[a * d + j] - means[b * d + j];
                    dist_sq += diff * diff;
                }
                if (dist_sq < 4.0 * spread * spread) ok = false;
            }
    }
    if (!ok)
        throw std::runtime_error(
            "gaussian_blobs: could not place means at pairwise distance >= 2*spread; "
            "increase the dimension or lower the class count");
    if (offset_scale != 0.0) {
        Rng offset_rng(mix_seed(mean_seed, 7));
        std::vector<double> offset(d);
        double norm_sq = 0.0;
        for (double& v : offset) {
            v = offset_rng.normal();
            norm_sq += v * v;
        }
        const double scale = offset_scale * spread / std::sqrt(norm_sq);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < d; ++j) means[i * d + j] += scale * offset[j];
    }

    Dataset ds;
    ds.dim = d;
    ds.seed = seed;
    ds.descriptor = "gaussian_blobs";
    Rng rng(mix_seed(seed, 3));
    for (std::size_t cls = 0; cls < k; ++cls)
        for (std::size_t i = 0; i < n_per_class; ++i) {
            for (std::size_t j = 0; j < d; ++j)
                ds.inputs.push_back(means[cls * d + j] + spread * rng.normal());
            ds.targets.push_back(static_cast<double>(cls));
            ds.tags.push_back(DomainTag::kInDistribution);
        }
    return ds;
}

enum class NoiseMode { kConstant, kHeteroscedastic };

// y = sin(2x) + 0.3x + eps with x uniform on [x_lo, x_hi]. Constant mode
// uses std 0.1; heteroscedastic mode uses std 0.05 + 0.15*|x|. noise_scale
// multiplies the std (0 turns noise off).
inline Dataset sinusoid_regression(std::size_t n, double x_lo, double x_hi, NoiseMode mode,
                                   std::uint64_t seed, double noise_scale = 1.0) {
    if (n < 2) throw std::runtime_error("sinusoid_regression: need at least 2 samples");
    if (!(x_lo < x_hi)) throw std::runtime_error("sinusoid_regression: empty x range");
    Dataset ds;
    ds.dim = 1;
    ds.seed = seed;
    ds.descriptor = "sinusoid_regression";
    Rng rng(mix_seed(seed, 4));
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(x_lo, x_hi);
        const double sigma =
            mode == NoiseMode::kConstant ? 0.1 : 0.05 + 0.15 * std::abs(x);
        ds.inputs.push_back(x);
        ds.targets.push_back(std::sin(2.0 * x) + 0.3 * x + noise_scale * sigma * rng.normal());
        ds.tags.push_back(DomainTag::kInDistribution);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// CSV schema: header "x0,...,x{d-1},target,domain_tag"; doubles as decimal
// text with 17 significant digits; domain_tag in {id, ood}.

inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    for (std::size_t j = 0; j < ds.dim; ++j) out << 'x' << j << ',';
    out << "target,domain_tag\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim; ++j) out << fmt17(ds.inputs[i * ds.dim + j]) << ',';
        out << fmt17(ds.targets[i]) << ','
            << (ds.tags[i] == DomainTag::kInDistribution ? "id" : "ood") << '\n';
    }
    if (!out) throw std::runtime_error("write_dataset_csv: write failed for " + path);
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_dataset_csv: " + path + " is empty (no header)");

    const auto header = split(trim(line), ',');
    if (header.size() < 3)
        throw std::runtime_error("read_dataset_csv: header must contain at least x0, target, "
                                 "domain_tag");
    const std::size_t dim = header.size() - 2;
    for (std::size_t j = 0; j < dim; ++j) {
        const std::string expect = "x" + std::to_string(j);
        if (header[j] != expect)
            throw std::runtime_error("read_dataset_csv: header column " + std::to_string(j) +
                                     " is '" + header[j] + "', expected '" + expect + "'");
    }
    if (header[dim] != "target")
        throw std::runtime_error("read_dataset_csv: header column " + std::to_string(dim) +
                                 " is '" + header[dim] + "', expected 'target'");
    if (header[dim + 1] != "domain_tag")
        throw std::runtime_error("read_dataset_csv: header column " + std::to_string(dim + 1) +
                                 " is '" + header[dim + 1] + "', expected 'domain_tag'");

    Dataset ds;
    ds.dim = dim;
    ds.descriptor = path;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const auto cells = split(row, ',');
        if (cells.size() != dim + 2)
            throw std::runtime_error("read_dataset_csv: line " + std::to_string(line_no) +
                                     " has " + std::to_string(cells.size()) +
                                     " columns, expected " + std::to_string(dim + 2));
        const std::string ctx = "read_dataset_csv: line " + std::to_string(line_no);
        for (std::size_t j = 0; j < dim; ++j) ds.inputs.push_back(parse_double(cells[j], ctx));
        ds.targets.push_back(parse_double(cells[dim], ctx));
        if (cells[dim + 1] == "id")
            ds.tags.push_back(DomainTag::kInDistribution);
        else if (cells[dim + 1] == "ood")
            ds.tags.push_back(DomainTag::kOutOfDistribution);
        else
            throw std::runtime_error(ctx + ": domain_tag must be 'id' or 'ood', got '" +
                                     cells[dim + 1] + "'");
    }
    if (ds.size() == 0)
        throw std::runtime_error("read_dataset_csv: " + path + " contains no samples");
    return ds;
}

}  // namespace ldu
