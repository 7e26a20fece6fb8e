#pragma once
// SGD-with-momentum and Adam parameter updates with optional L2 weight decay
// and global-norm gradient clipping. State is keyed by parameter order, so a
// given optimizer instance must always be stepped with the same parameter
// list.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldu/tensor.hpp"

namespace ldu {

enum class OptimizerKind { kSgdMomentum, kAdam };

struct OptimizerConfig {
    OptimizerKind kind{OptimizerKind::kAdam};
    double learning_rate{1e-3};
    double weight_decay{0.0};
    double momentum{0.9};
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
    double grad_clip{0.0};  // global norm; 0 disables
};

class Optimizer {
  public:
    explicit Optimizer(OptimizerConfig config) : config_(config) {
        if (config_.learning_rate <= 0.0)
            throw std::runtime_error("Optimizer: learning rate must be positive");
    }

    const OptimizerConfig& config() const { return config_; }

    void step(std::span<Tensor> params) {
        if (state_.empty()) {
            state_.resize(params.size());
            for (std::size_t i = 0; i < params.size(); ++i)
                state_[i].assign(params[i].size() * 2, 0.0);  // momentum/m and v
        } else if (state_.size() != params.size()) {
            throw std::runtime_error("Optimizer::step: parameter list changed size");
        }
        ++t_;

        double clip_scale = 1.0;
        if (config_.grad_clip > 0.0) {
            double norm_sq = 0.0;
            for (auto& p : params)
                for (double g : p.grad()) norm_sq += g * g;
            const double norm = std::sqrt(norm_sq);
            if (norm > config_.grad_clip) clip_scale = config_.grad_clip / norm;
        }

        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& values = params[i].mutable_values();
            auto& grads = params[i].mutable_grad();
            if (grads.size() != values.size())
                throw std::runtime_error("Optimizer::step: parameter has no gradient buffer");
            auto& st = state_[i];
            for (std::size_t k = 0; k < values.size(); ++k) {
                double g = grads[k];
                if (!std::isfinite(g))
                    throw std::runtime_error("Optimizer::step: non-finite gradient in parameter " +
                                             std::to_string(i) + " entry " + std::to_string(k));
                g = g * clip_scale + config_.weight_decay * values[k];
                if (config_.kind == OptimizerKind::kSgdMomentum) {
                    double& v = st[k];
                    v = config_.momentum * v + g;
                    values[k] -= config_.learning_rate * v;
                } else {
                    double& m = st[k];
                    double& v = st[values.size() + k];
                    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
                    v = config_.beta2 * v + (1.0 - config_.beta2) * g * g;
                    const double mhat = m / (1.0 - std::pow(config_.beta1, t_));
                    const double vhat = v / (1.0 - std::pow(config_.beta2, t_));
                    values[k] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
                }
            }
        }
    }

  private:
    OptimizerConfig config_;
    std::vector<std::vector<double>> state_;
    long t_{0};
};

}  // namespace ldu
